#include "ensei/counters.hpp"

namespace ensei {

TransformCounters& transform_counters() {
    thread_local TransformCounters counters;
    return counters;
}

void reset_transform_counters() { transform_counters() = TransformCounters{}; }

} // namespace ensei
