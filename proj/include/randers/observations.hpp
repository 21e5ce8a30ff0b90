#pragma once

#include "randers/grid.hpp"

namespace randers {

/// Sparse arrival-time supervision for one source configuration: the source
/// mask that produced the field, the observed-node mask and the observed
/// times on it.
struct ObservationSet {
    SourceMask sources;
    Grid2D<uint8_t> observed;
    Grid2D<double> values;
    double noise_level = 0.0;

    int observed_count() const {
        int n = 0;
        for (size_t i = 0; i < observed.size(); ++i) n += observed[i] ? 1 : 0;
        return n;
    }
};

}  // namespace randers
