#include "e3d/backend.hpp"

#include <stdexcept>
#include <thread>

namespace e3d {

bool avx2_available() {
#if defined(EFF3D_HAVE_AVX2_TU) && (defined(__x86_64__) || defined(_M_X64))
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok;
#else
    return false;
#endif
}

Backend resolve_backend(Backend requested) {
    switch (requested) {
        case Backend::kAuto:
            return avx2_available() ? Backend::kAvx2 : Backend::kScalar;
        case Backend::kAvx2:
            return avx2_available() ? Backend::kAvx2 : Backend::kScalar;
        default:
            return requested;
    }
}

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::kAuto: return "auto";
        case Backend::kReference: return "reference";
        case Backend::kScalar: return "scalar";
        case Backend::kAvx2: return "avx2";
    }
    return "unknown";
}

Backend backend_from_name(const std::string& name) {
    if (name == "auto") return Backend::kAuto;
    if (name == "reference") return Backend::kReference;
    if (name == "scalar") return Backend::kScalar;
    if (name == "avx2") return Backend::kAvx2;
    throw std::invalid_argument("unknown backend: " + name);
}

int ExecContext::effective_threads() const {
    if (threads > 0) return threads;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

} // namespace e3d
