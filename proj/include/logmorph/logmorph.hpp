#pragma once

// single include for the whole library

#include "case.hpp"
#include "dense.hpp"
#include "eig.hpp"
#include "fem.hpp"
#include "field.hpp"
#include "flow.hpp"
#include "gmres.hpp"
#include "guards.hpp"
#include "ilut.hpp"
#include "kernels.hpp"
#include "mesh.hpp"
#include "morphology.hpp"
#include "ode.hpp"
#include "solver.hpp"
#include "sparse.hpp"
#include "stabilization.hpp"
#include "tensor.hpp"
