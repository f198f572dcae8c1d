#pragma once

#include "eood/ingest/dump.hpp"
#include "eood/ingest/json_io.hpp"
#include "eood/ingest/manifest.hpp"
