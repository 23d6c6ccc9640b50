#pragma once

#include "krylov_td/error.hpp"
#include "krylov_td/numcore.hpp"
#include "krylov_td/protocol.hpp"
#include "krylov_td/models.hpp"
#include "krylov_td/lanczos_td.hpp"
#include "krylov_td/chain.hpp"
#include "krylov_td/arnoldi.hpp"
#include "krylov_td/ising_precise.hpp"
#include "krylov_td/floquet.hpp"
#include "krylov_td/algebra.hpp"
#include "krylov_td/experiment.hpp"
#include "krylov_td/validation.hpp"
