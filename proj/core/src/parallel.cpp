#include "jmmle/parallel.hpp"

#include <cstdlib>
#include <string>

#include "jmmle/errors.hpp"

namespace jmmle {

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("JMMLE_WORKERS"); env && *env) {
        try {
            const int w = std::stoi(env);
            if (w > 0) return w;
        } catch (const std::exception&) {
        }
        fail(ErrorKind::Config, std::string("JMMLE_WORKERS must be a positive integer, got '") + env + "'");
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace jmmle
