#pragma once

namespace nlffr {

// Caps the OpenMP team size used by every parallel kernel. Values < 1 restore
// the default (all available cores). Results never depend on this setting.
void set_num_threads(int n);
int max_threads();

}  // namespace nlffr
