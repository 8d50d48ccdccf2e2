#pragma once

namespace rmgan {

// Raises the glibc mmap and trim thresholds so freed tensor buffers stay in
// the heap between steps. No-op on other allocators.
void tune_allocator();

}  // namespace rmgan
