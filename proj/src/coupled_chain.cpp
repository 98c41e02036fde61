// The coupled-pair runner is a header-only template (include/cgibbs/coupled_chain.hpp).
// This translation unit just keeps the header self-contained under the library build.
#include "cgibbs/coupled_chain.hpp"
