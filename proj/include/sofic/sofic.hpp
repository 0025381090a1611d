#pragma once

#include "sofic/core.hpp"
#include "sofic/groups.hpp"
#include "sofic/substitution.hpp"
#include "sofic/toeplitz.hpp"
#include "sofic/flows.hpp"
#include "sofic/construction.hpp"
#include "sofic/verify.hpp"
#include "sofic/io.hpp"
