#pragma once

#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cvknit {

// Execution policy for the data-parallel kernels. Serial is the reference
// path; Parallel runs the same chunk decomposition with OpenMP. Results are
// bit-identical between the two because the chunk boundaries and the merge
// order are fixed by the chunk index, never by the worker count.
enum class Exec { Serial, Parallel };

Exec default_exec();
void set_default_exec(Exec e);

inline std::size_t chunk_count(std::size_t n_items, std::size_t chunk_size) {
    return n_items == 0 ? 0 : (n_items + chunk_size - 1) / chunk_size;
}

// Evaluates per_chunk(chunk_index, begin, end) for every fixed-size chunk of
// [0, n_items) and merges the partials pairwise in chunk order.
template <class Partial, class ChunkFn, class MergeFn>
Partial chunked_reduce(std::size_t n_items, std::size_t chunk_size, Exec exec,
                       Partial identity, ChunkFn per_chunk, MergeFn merge) {
    const std::size_t n_chunks = chunk_count(n_items, chunk_size);
    if (n_chunks == 0) return identity;
    std::vector<Partial> partials(n_chunks, identity);

    auto run_chunk = [&](std::size_t c) {
        const std::size_t begin = c * chunk_size;
        const std::size_t end = std::min(begin + chunk_size, n_items);
        partials[c] = per_chunk(c, begin, end);
    };

    if (exec == Exec::Parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
        for (long long c = 0; c < static_cast<long long>(n_chunks); ++c)
            run_chunk(static_cast<std::size_t>(c));
#else
        for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
#endif
    } else {
        for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
    }

    // Pairwise merge tree, fixed by index.
    std::size_t width = 1;
    while (width < n_chunks) {
        for (std::size_t i = 0; i + width < n_chunks; i += 2 * width)
            partials[i] = merge(std::move(partials[i]), std::move(partials[i + width]));
        width *= 2;
    }
    return partials[0];
}

// Plain parallel-for over independent items (each item writes disjoint
// output, so the schedule cannot change the result).
template <class Fn>
void parallel_for(std::size_t n_items, Exec exec, Fn fn) {
    if (exec == Exec::Parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n_items); ++i)
            fn(static_cast<std::size_t>(i));
        return;
#endif
    }
    for (std::size_t i = 0; i < n_items; ++i) fn(i);
}

}  // namespace cvknit
