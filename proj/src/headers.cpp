// Compiles every public header in one translation unit so a missing include
// or an ODR slip in the header-only library fails the build.
#include "ilc/core.hpp"
#include "ilc/system.hpp"
#include "ilc/model_design.hpp"
#include "ilc/implicit_gamma.hpp"
#include "ilc/controller.hpp"
#include "ilc/simulator.hpp"
#include "ilc/io.hpp"
#include "ilc/config.hpp"
#include "ilc/cli.hpp"
