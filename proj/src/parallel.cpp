#include "formkac/parallel.hpp"

#include <cstdlib>
#include <string>

namespace formkac {

int resolve_threads(int requested)
{
    if (requested > 0) {
        return requested;
    }
    if (const char* env = std::getenv("FORMKAC_THREADS")) {
        try {
            const int v = std::stoi(env);
            if (v > 0) {
                return v;
            }
        } catch (const std::exception&) {
            // fall through to the hardware default
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace formkac
