#pragma once

#include "jcisis/core_stat.hpp"
#include "jcisis/error.hpp"
#include "jcisis/ingest.hpp"
#include "jcisis/matrix.hpp"
#include "jcisis/rng.hpp"
#include "jcisis/scanner.hpp"
#include "jcisis/simgen.hpp"
