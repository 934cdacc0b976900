#pragma once

#include <string>

namespace e3d {

/// Kernel implementation selected at runtime. `kAuto` resolves to the best
/// variant the host CPU supports; `kReference` forces the naive loops that
/// serve as the correctness oracle.
enum class Backend {
    kAuto,
    kReference,
    kScalar,
    kAvx2,
};

bool avx2_available();

/// Maps kAuto onto a concrete backend; downgrades kAvx2 to kScalar when the
/// host lacks AVX2 support.
Backend resolve_backend(Backend requested);

const char* backend_name(Backend b);
Backend backend_from_name(const std::string& name); // throws on unknown name

/// Execution parameters threaded through every operation. Operations stay
/// pure; the context only picks the kernel variant and the worker count.
/// threads == 0 means hardware concurrency.
struct ExecContext {
    Backend backend = Backend::kAuto;
    int threads = 0;

    int effective_threads() const;
};

} // namespace e3d
