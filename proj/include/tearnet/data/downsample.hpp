#pragma once

#include <string>

#include "tearnet/data/case_record.hpp"

namespace tearnet {

// Box-filter downsampling: each output pixel is the arithmetic mean of its
// k x k block. Preserves fractional semantics (damage fraction, strut
// fraction) and turns displacement into a block-mean displacement.
inline Tensor downsample(const Tensor& field, std::size_t k) {
    if (field.rank() != 2) throw DataError("downsample: expected a 2-d field");
    const std::size_t h = field.dims[0], w = field.dims[1];
    if (k == 0 || h % k != 0 || w % k != 0)
        throw DataError("downsample: kernel " + std::to_string(k) + " does not divide " +
                        shape_str(field.dims));
    Tensor out({h / k, w / k}, 0.0);
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) out.at2(i / k, j / k) += field.at2(i, j);
    for (auto& v : out.data) v /= static_cast<double>(k * k);
    return out;
}

// Downsampled copy of a whole case (fields only; volumes and pressures pass
// through). The strut map becomes a per-pixel strut fraction.
struct CaseFields {
    std::uint64_t case_id = 0;
    Tensor strut;  // fraction per pixel after the box filter
    std::vector<double> volumes;
    std::vector<double> pressures;
    std::vector<Tensor> damage;
    std::vector<Tensor> displacement;

    std::size_t n_steps() const { return volumes.size(); }
};

inline CaseFields downsample_case(const CaseRecord& rec, std::size_t k) {
    CaseFields out;
    out.case_id = rec.case_id;
    out.strut = downsample(rec.strut.as_field(), k);
    out.volumes.reserve(rec.steps.size());
    for (const auto& s : rec.steps) {
        out.volumes.push_back(s.volume);
        out.pressures.push_back(s.pressure);
        out.damage.push_back(downsample(s.damage, k));
        out.displacement.push_back(downsample(s.displacement, k));
    }
    return out;
}

}  // namespace tearnet
