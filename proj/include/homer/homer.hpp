#pragma once

#include "config.hpp"
#include "errors.hpp"
#include "evalharness.hpp"
#include "imagination.hpp"
#include "jokebase.hpp"
#include "lexdb.hpp"
#include "pipeline.hpp"
#include "providers.hpp"
#include "roles.hpp"
#include "scoring.hpp"
#include "text.hpp"
#include "util.hpp"
