#include "wsc/fields.hpp"

namespace wsc {

DistributionField orthogonal_complement(const DistributionField& f) {
  DistributionField out = f;
  for (auto& s : out.fibers) s = s.complement();
  return out;
}

std::vector<Vec3> project_vector_field(const DistributionField& f,
                                       const std::vector<Vec3>& w) {
  std::vector<Vec3> out(w.size(), Vec3::Zero());
  for (size_t c = 0; c < w.size(); ++c) out[c] = f.fibers[c].project(w[c]);
  return out;
}

}  // namespace wsc
