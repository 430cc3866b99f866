#include "styler/image.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace styler {

namespace {

// glibc hands buffers above its mmap threshold (32 MB at most) straight back
// to the kernel on free, so every 16 MP plane would page-fault in afresh.
// Keeping them on the heap makes per-pixel cost independent of image size.
#if defined(__GLIBC__)
const bool kAllocatorTuned = [] {
  mallopt(M_MMAP_THRESHOLD, 512 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
  return true;
}();
#endif

}  // namespace

Image clip01(Image img) {
  for (auto& p : img.planes()) p = p.max(0.0).min(1.0);
  return img;
}

}  // namespace styler
