#pragma once

#include "pesin_lab/types.hpp"
#include "pesin_lab/random.hpp"
#include "pesin_lab/parallel.hpp"
#include "pesin_lab/vector_field.hpp"
#include "pesin_lab/integrator.hpp"
#include "pesin_lab/polynomial.hpp"
#include "pesin_lab/hamiltonian_system.hpp"
#include "pesin_lab/systems.hpp"
#include "pesin_lab/poincare.hpp"
#include "pesin_lab/lyapunov.hpp"
#include "pesin_lab/suspension.hpp"
#include "pesin_lab/entropy.hpp"
#include "pesin_lab/hamiltonian.hpp"
#include "pesin_lab/json_io.hpp"
