#include "ctxf/checkpoint.hpp"

#include <algorithm>
#include <stdexcept>

#include "ctxf/io.hpp"

namespace ctxf {

void save_checkpoint(const std::string& path, const ParamList& params) {
  std::ofstream os = io::open_out(path);
  io::write_bytes(os, "CTXF", 4);
  io::write_u32(os, kCheckpointVersion);
  for (const Param& p : params) {
    io::write_string(os, p.name);
    const Shape& shape = p.tensor.shape();
    io::write_u32(os, static_cast<std::uint32_t>(shape.size()));
    for (int d : shape) io::write_u32(os, static_cast<std::uint32_t>(d));
    io::write_f32s(os, p.tensor.data().data(), p.tensor.data().size());
  }
  if (!os) throw std::runtime_error("failed writing checkpoint '" + path + "'");
}

ParamList load_checkpoint(const std::string& path) {
  std::ifstream is = io::open_in(path);
  io::expect_magic(is, "CTXF", path);
  std::uint32_t version = io::read_u32(is, "checkpoint version in '" + path + "'");
  if (version != kCheckpointVersion)
    throw std::runtime_error("'" + path + "': unsupported checkpoint version " +
                             std::to_string(version));
  ParamList out;
  while (true) {
    // Records run until EOF; probe one byte to distinguish clean EOF from
    // a truncated record.
    int c = is.peek();
    if (c == std::char_traits<char>::eof()) break;
    std::string name = io::read_string(is, "parameter name in '" + path + "'");
    std::uint32_t ndim = io::read_u32(is, "'" + name + "' rank in '" + path + "'");
    if (ndim > 8) throw std::runtime_error("'" + path + "': implausible rank for '" + name + "'");
    Shape shape;
    std::int64_t numel = 1;
    for (std::uint32_t i = 0; i < ndim; ++i) {
      std::uint32_t d = io::read_u32(is, "'" + name + "' dim in '" + path + "'");
      if (d == 0 || d > (1u << 28))
        throw std::runtime_error("'" + path + "': bad dimension for '" + name + "'");
      shape.push_back(static_cast<int>(d));
      numel *= d;
    }
    std::vector<float> data(static_cast<std::size_t>(numel));
    io::read_f32s(is, data.data(), data.size(), "'" + name + "' payload in '" + path + "'");
    out.push_back({std::move(name), Tensor::from_data(std::move(shape), std::move(data))});
  }
  return out;
}

void load_checkpoint_into(const std::string& path, ParamList& params) {
  ParamList loaded = load_checkpoint(path);
  if (loaded.size() != params.size())
    throw std::runtime_error("'" + path + "': has " + std::to_string(loaded.size()) +
                             " parameters, expected " + std::to_string(params.size()));
  for (Param& p : params) {
    auto it = std::find_if(loaded.begin(), loaded.end(),
                           [&](const Param& q) { return q.name == p.name; });
    if (it == loaded.end())
      throw std::runtime_error("'" + path + "': missing parameter '" + p.name + "'");
    if (it->tensor.shape() != p.tensor.shape())
      throw std::runtime_error("'" + path + "': parameter '" + p.name + "' has shape " +
                               shape_str(it->tensor.shape()) + ", expected " +
                               shape_str(p.tensor.shape()));
    auto dst = p.tensor.mutable_data();
    auto src = it->tensor.data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

}  // namespace ctxf
