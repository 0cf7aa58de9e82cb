#include "reacher/model.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace reacher {

using nlohmann::json;

ArchConfig paper_scale_arch() {
  ArchConfig a;
  a.resolution = 128;
  a.encoder_channels = {16, 32, 64, 64, 128};
  a.z_g = 256;
  a.z_t = 512;
  a.classifier_hidden = {1024, 512};
  a.decoder_hidden = {1024, 4096};
  return a;
}

namespace nets {

template <class T>
std::vector<ad::Param<T>*> Model<T>::all_params() {
  std::vector<ad::Param<T>*> out;
  for (Encoder<T>* e : {&phi, &psi}) {
    for (ConvBlock<T>& b : e->blocks) {
      out.push_back(&b.wa);
      out.push_back(&b.ba);
      out.push_back(&b.wb);
      out.push_back(&b.bb);
    }
    out.push_back(&e->head_w);
    out.push_back(&e->head_b);
  }
  for (Mlp<T>* m : {&decoder, &classifier}) {
    for (size_t i = 0; i < m->w.size(); ++i) {
      out.push_back(&m->w[i]);
      out.push_back(&m->b[i]);
    }
  }
  return out;
}

template <class T>
std::vector<ad::Param<T>*> Model<T>::psi_params() {
  std::vector<ad::Param<T>*> out;
  for (ConvBlock<T>& b : psi.blocks) {
    out.push_back(&b.wa);
    out.push_back(&b.ba);
    out.push_back(&b.wb);
    out.push_back(&b.bb);
  }
  out.push_back(&psi.head_w);
  out.push_back(&psi.head_b);
  for (size_t i = 0; i < decoder.w.size(); ++i) {
    out.push_back(&decoder.w[i]);
    out.push_back(&decoder.b[i]);
  }
  return out;
}

template <class T>
std::vector<ad::Param<T>*> Model<T>::phi_sigma_params() {
  std::vector<ad::Param<T>*> out;
  for (ConvBlock<T>& b : phi.blocks) {
    out.push_back(&b.wa);
    out.push_back(&b.ba);
    out.push_back(&b.wb);
    out.push_back(&b.bb);
  }
  out.push_back(&phi.head_w);
  out.push_back(&phi.head_b);
  for (size_t i = 0; i < classifier.w.size(); ++i) {
    out.push_back(&classifier.w[i]);
    out.push_back(&classifier.b[i]);
  }
  return out;
}

namespace {

template <class T>
Encoder<T> init_encoder(const std::string& tag, int in_ch, int z, const ArchConfig& arch, Rng& rng) {
  Encoder<T> enc;
  int ch = in_ch;
  for (size_t i = 0; i < arch.encoder_channels.size(); ++i) {
    const int oc = arch.encoder_channels[i];
    ConvBlock<T> b;
    b.wa = ad::Param<T>(tag + ".b" + std::to_string(i) + ".wa", {oc, ch, arch.kernel, arch.kernel});
    b.ba = ad::Param<T>(tag + ".b" + std::to_string(i) + ".ba", {oc});
    b.wb = ad::Param<T>(tag + ".b" + std::to_string(i) + ".wb", {oc, oc, arch.kernel, arch.kernel});
    b.bb = ad::Param<T>(tag + ".b" + std::to_string(i) + ".bb", {oc});
    ad::kaiming_uniform(b.wa.value, ch * arch.kernel * arch.kernel, rng);
    ad::kaiming_uniform(b.wb.value, oc * arch.kernel * arch.kernel, rng);
    enc.blocks.push_back(std::move(b));
    ch = oc;
  }
  const int feat = arch.trunk_features();
  enc.head_w = ad::Param<T>(tag + ".head.w", {z, feat});
  enc.head_b = ad::Param<T>(tag + ".head.b", {z});
  ad::kaiming_uniform(enc.head_w.value, feat, rng);
  return enc;
}

template <class T>
Mlp<T> init_mlp(const std::string& tag, int in, const std::vector<int>& hidden, int out, Rng& rng) {
  Mlp<T> mlp;
  std::vector<int> dims{in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    mlp.w.emplace_back(tag + ".w" + std::to_string(i), std::vector<int>{dims[i + 1], dims[i]});
    mlp.b.emplace_back(tag + ".b" + std::to_string(i), std::vector<int>{dims[i + 1]});
    ad::kaiming_uniform(mlp.w.back().value, dims[i], rng);
  }
  return mlp;
}

}  // namespace

template <class T>
Model<T> init_model(const ArchConfig& arch, uint64_t seed) {
  if (arch.trunk_spatial() < 1) throw std::invalid_argument("arch: trunk collapses below 1 pixel");
  Model<T> m;
  m.arch = arch;
  Rng rng(derive_seed(seed, "model_init"));
  m.phi = init_encoder<T>("phi", 3, arch.z_g, arch, rng);
  m.psi = init_encoder<T>("psi", 1, arch.z_t, arch, rng);
  m.decoder = init_mlp<T>("decoder", arch.z_t, arch.decoder_hidden,
                          arch.resolution * arch.resolution, rng);
  m.classifier = init_mlp<T>("classifier", arch.z_g + arch.z_t, arch.classifier_hidden, 2, rng);
  return m;
}

template <class T>
int encode(ad::Graph<T>& g, Encoder<T>& enc, const ArchConfig& arch, int input, bool frozen) {
  auto p = [&](ad::Param<T>& prm) { return frozen ? g.constant(prm.value) : g.param(prm); };
  int h = input;
  for (ConvBlock<T>& b : enc.blocks) {
    h = g.elu(g.conv2d(h, p(b.wa), p(b.ba), 1, arch.pad));
    h = g.elu(g.conv2d(h, p(b.wb), p(b.bb), 2, arch.pad));
  }
  return g.linear(g.flatten(h), p(enc.head_w), p(enc.head_b));
}

template <class T>
int decode(ad::Graph<T>& g, Mlp<T>& dec, const ArchConfig& arch, int z, bool frozen) {
  auto p = [&](ad::Param<T>& prm) { return frozen ? g.constant(prm.value) : g.param(prm); };
  int h = z;
  for (size_t i = 0; i < dec.w.size(); ++i) {
    h = g.linear(h, p(dec.w[i]), p(dec.b[i]));
    if (i + 1 < dec.w.size()) h = g.elu(h);
  }
  return g.reshape(g.sigmoid(h), {1, arch.resolution, arch.resolution});
}

template <class T>
int classifier_logits(ad::Graph<T>& g, Mlp<T>& cls, int z_g, int z_t, bool frozen) {
  auto p = [&](ad::Param<T>& prm) { return frozen ? g.constant(prm.value) : g.param(prm); };
  int h = g.concat(z_g, z_t);
  for (size_t i = 0; i < cls.w.size(); ++i) {
    h = g.linear(h, p(cls.w[i]), p(cls.b[i]));
    if (i + 1 < cls.w.size()) h = g.elu(h);
  }
  return h;
}

template <class T>
int recon_loss(ad::Graph<T>& g, int decoded, int target, double mu) {
  int ls = g.bce_mean(decoded, target);
  if (mu == 0.0) return ls;
  return g.add(ls, g.scale(g.total_variation(decoded), static_cast<T>(mu)));
}

double task_loss_value(double prob1, int label) {
  const double eps = 1e-7;
  const double p = std::min(1.0 - eps, std::max(eps, prob1));
  return -(label * std::log(p) + (1 - label) * std::log(1 - p));
}

template <class T>
Tensor<T> raster_to_tensor(const Raster& r) {
  Tensor<T> t({r.channels, r.height, r.width});
  for (size_t i = 0; i < r.values.size(); ++i) t[i] = static_cast<T>(r.values[i]);
  return t;
}

template <class T>
Tensor<T> bytes_to_tensor(const std::vector<uint8_t>& bytes, int channels, int res) {
  Tensor<T> t({channels, res, res});
  for (size_t i = 0; i < bytes.size(); ++i) t[i] = static_cast<T>(bytes[i] / 255.0);
  return t;
}

Raster tensor_to_raster(const Tensor<real_t>& t) {
  Raster r(t.shape[0], t.shape[1], t.shape[2]);
  for (size_t i = 0; i < r.values.size(); ++i) r.values[i] = static_cast<double>(t[i]);
  return r;
}

template <class T>
std::vector<T> tool_encode(Model<T>& m, const Raster& tool) {
  ad::Graph<T> g;
  int z = encode(g, m.psi, m.arch, g.constant(raster_to_tensor<T>(tool)), true);
  const Tensor<T>& v = g.value(z);
  return std::vector<T>(v.data(), v.data() + v.numel());
}

template <class T>
std::vector<T> task_encode(Model<T>& m, const Raster& task) {
  ad::Graph<T> g;
  int z = encode(g, m.phi, m.arch, g.constant(raster_to_tensor<T>(task)), true);
  const Tensor<T>& v = g.value(z);
  return std::vector<T>(v.data(), v.data() + v.numel());
}

template <class T>
Raster tool_decode(Model<T>& m, const std::vector<T>& z_t) {
  ad::Graph<T> g;
  Tensor<T> z({static_cast<int>(z_t.size())});
  std::copy(z_t.begin(), z_t.end(), z.data());
  int d = decode(g, m.decoder, m.arch, g.constant(std::move(z)), true);
  Tensor<real_t> out(g.value(d).shape);
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = static_cast<real_t>(g.value(d)[i]);
  return tensor_to_raster(out);
}

template <class T>
double classify(Model<T>& m, const std::vector<T>& z_g, const std::vector<T>& z_t) {
  ad::Graph<T> g;
  Tensor<T> zg({static_cast<int>(z_g.size())}), zt({static_cast<int>(z_t.size())});
  std::copy(z_g.begin(), z_g.end(), zg.data());
  std::copy(z_t.begin(), z_t.end(), zt.data());
  int logits = classifier_logits(g, m.classifier, g.constant(std::move(zg)),
                                 g.constant(std::move(zt)), true);
  int sm = g.softmax(logits);
  return static_cast<double>(g.value(sm)[1]);
}

namespace {

json arch_to_json(const ArchConfig& a) {
  return json{{"resolution", a.resolution},
              {"encoder_channels", a.encoder_channels},
              {"kernel", a.kernel},
              {"pad", a.pad},
              {"z_g", a.z_g},
              {"z_t", a.z_t},
              {"classifier_hidden", a.classifier_hidden},
              {"decoder_hidden", a.decoder_hidden}};
}

ArchConfig arch_from_json(const json& j) {
  ArchConfig a;
  a.resolution = j.at("resolution");
  a.encoder_channels = j.at("encoder_channels").get<std::vector<int>>();
  a.kernel = j.at("kernel");
  a.pad = j.at("pad");
  a.z_g = j.at("z_g");
  a.z_t = j.at("z_t");
  a.classifier_hidden = j.at("classifier_hidden").get<std::vector<int>>();
  a.decoder_hidden = j.at("decoder_hidden").get<std::vector<int>>();
  return a;
}

constexpr char kMagic[8] = {'R', 'C', 'H', 'C', 'K', 'P', 'T', '1'};

}  // namespace

template <class T>
void save_checkpoint(Model<T>& m, const std::string& path, double val_loss) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  json names = json::array();
  for (ad::Param<T>* p : m.all_params()) names.push_back({{"name", p->name}, {"shape", p->value.shape}});
  json header{{"format_version", 1},
              {"arch", arch_to_json(m.arch)},
              {"step", m.step},
              {"task_trained", m.task_trained},
              {"val_loss", val_loss},
              {"params", names}};
  const std::string hs = header.dump();
  f.write(kMagic, 8);
  const uint32_t len = static_cast<uint32_t>(hs.size());
  f.write(reinterpret_cast<const char*>(&len), 4);
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (ad::Param<T>* p : m.all_params()) {
    std::vector<float> buf(p->value.numel());
    for (int64_t i = 0; i < p->value.numel(); ++i) buf[i] = static_cast<float>(p->value[i]);
    f.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!f) throw std::runtime_error("checkpoint write failed: " + path);
}

template <class T>
Model<T> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  uint32_t len = 0;
  f.read(reinterpret_cast<char*>(&len), 4);
  std::string hs(len, '\0');
  f.read(hs.data(), len);
  json header = json::parse(hs);
  if (header.at("format_version") != 1) throw std::runtime_error("unsupported checkpoint version");
  Model<T> m = init_model<T>(arch_from_json(header.at("arch")), 0);
  m.step = header.at("step");
  m.task_trained = header.at("task_trained");
  size_t idx = 0;
  const json& names = header.at("params");
  for (ad::Param<T>* p : m.all_params()) {
    if (idx >= names.size() || names[idx].at("name") != p->name)
      throw std::runtime_error("checkpoint parameter order mismatch: " + p->name);
    std::vector<float> buf(p->value.numel());
    f.read(reinterpret_cast<char*>(buf.data()),
           static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!f) throw std::runtime_error("truncated checkpoint: " + path);
    for (int64_t i = 0; i < p->value.numel(); ++i) p->value[i] = static_cast<T>(buf[i]);
    ++idx;
  }
  return m;
}

template struct Model<float>;
template struct Model<double>;
template Model<float> init_model<float>(const ArchConfig&, uint64_t);
template Model<double> init_model<double>(const ArchConfig&, uint64_t);
template int encode<float>(ad::Graph<float>&, Encoder<float>&, const ArchConfig&, int, bool);
template int encode<double>(ad::Graph<double>&, Encoder<double>&, const ArchConfig&, int, bool);
template int decode<float>(ad::Graph<float>&, Mlp<float>&, const ArchConfig&, int, bool);
template int decode<double>(ad::Graph<double>&, Mlp<double>&, const ArchConfig&, int, bool);
template int classifier_logits<float>(ad::Graph<float>&, Mlp<float>&, int, int, bool);
template int classifier_logits<double>(ad::Graph<double>&, Mlp<double>&, int, int, bool);
template int recon_loss<float>(ad::Graph<float>&, int, int, double);
template int recon_loss<double>(ad::Graph<double>&, int, int, double);
template Tensor<float> raster_to_tensor<float>(const Raster&);
template Tensor<double> raster_to_tensor<double>(const Raster&);
template Tensor<float> bytes_to_tensor<float>(const std::vector<uint8_t>&, int, int);
template Tensor<double> bytes_to_tensor<double>(const std::vector<uint8_t>&, int, int);
template std::vector<float> tool_encode<float>(Model<float>&, const Raster&);
template std::vector<double> tool_encode<double>(Model<double>&, const Raster&);
template std::vector<float> task_encode<float>(Model<float>&, const Raster&);
template std::vector<double> task_encode<double>(Model<double>&, const Raster&);
template Raster tool_decode<float>(Model<float>&, const std::vector<float>&);
template Raster tool_decode<double>(Model<double>&, const std::vector<double>&);
template double classify<float>(Model<float>&, const std::vector<float>&, const std::vector<float>&);
template double classify<double>(Model<double>&, const std::vector<double>&, const std::vector<double>&);
template void save_checkpoint<float>(Model<float>&, const std::string&, double);
template void save_checkpoint<double>(Model<double>&, const std::string&, double);
template Model<float> load_checkpoint<float>(const std::string&);
template Model<double> load_checkpoint<double>(const std::string&);

}  // namespace nets
}  // namespace reacher
