#pragma once

#include "prx/common.hpp"

namespace prx::fft {

// Unitary DFT pair: both directions carry a 1/sqrt(N) factor so that
// inverse(forward(x)) == x and signal energy is preserved in either domain.
// Plans are cached per transform size; all calls are serialized internally,
// so the functions are safe to use from tests that run cases concurrently.
cvec forward(const cvec& x);
cvec inverse(const cvec& x);

}  // namespace prx::fft
