#pragma once

#include "jcisis/ingest/csv.hpp"
#include "jcisis/ingest/genotype.hpp"
#include "jcisis/ingest/packed.hpp"
