#include "reacher/gradcheck_suite.hpp"

#include <algorithm>
#include <functional>

#include "reacher/model.hpp"

namespace reacher {

using GD = ad::Graph<double>;
using TD = Tensor<double>;

double GradCheckReport::worst() const {
  double w = 0.0;
  for (const GradCheckItem& i : items) w = std::max(w, i.max_rel_err);
  return w;
}

namespace {

TD randn(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  TD t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal() * scale;
  return t;
}

double check_build(const std::vector<TD>& inputs,
                   const std::function<int(GD&, const std::vector<int>&)>& build) {
  GD g;
  std::vector<int> ids;
  for (const TD& t : inputs) ids.push_back(g.leaf(t.clone()));
  const int loss = build(g, ids);
  g.backward(loss);
  std::vector<double> flat, analytic;
  for (size_t k = 0; k < inputs.size(); ++k)
    for (int64_t i = 0; i < inputs[k].numel(); ++i) {
      flat.push_back(inputs[k][i]);
      analytic.push_back(g.grad(ids[k])[i]);
    }
  auto f = [&](const std::vector<double>& x) {
    GD h;
    std::vector<int> hids;
    size_t off = 0;
    for (const TD& t : inputs) {
      TD c = t.clone();
      for (int64_t i = 0; i < c.numel(); ++i) c[i] = x[off++];
      hids.push_back(h.leaf(std::move(c)));
    }
    return h.value(build(h, hids))[0];
  };
  return ad::grad_check(f, flat, analytic);
}

double check_miniature() {
  ArchConfig arch;
  arch.resolution = 8;
  arch.encoder_channels = {2, 3};
  arch.z_g = 6;
  arch.z_t = 6;
  arch.classifier_hidden = {8, 4};
  arch.decoder_hidden = {16, 32};
  nets::Model<double> m = nets::init_model<double>(arch, 99);

  Rng rng(7);
  TD task = randn({3, 8, 8}, rng, 0.5);
  TD tool({1, 8, 8});
  for (int64_t i = 0; i < tool.numel(); ++i) tool[i] = rng.bernoulli(0.3) ? 1.0 : 0.0;
  const int label = 1;
  const double mu = 0.1;

  auto params = m.all_params();

  // analytic gradients over every model parameter
  std::vector<double> flat, analytic;
  {
    for (auto* p : params) p->zero_grad();
    GD g;
    int zg = nets::encode(g, m.phi, m.arch, g.constant(task.clone()));
    int zt = nets::encode(g, m.psi, m.arch, g.constant(tool.clone()));
    int dec = nets::decode(g, m.decoder, m.arch, zt);
    int l_recon = nets::recon_loss(g, dec, g.constant(tool.clone()), mu);
    int l_task = g.softmax_xent(nets::classifier_logits(g, m.classifier, zg, zt), label);
    g.backward(g.add(l_recon, l_task));
    for (auto* p : params)
      for (int64_t i = 0; i < p->value.numel(); ++i) {
        flat.push_back(p->value[i]);
        analytic.push_back(p->grad[i]);
      }
  }
  auto f = [&](const std::vector<double>& x) {
    size_t off = 0;
    for (auto* p : params)
      for (int64_t i = 0; i < p->value.numel(); ++i) p->value[i] = x[off++];
    GD g;
    int zg = nets::encode(g, m.phi, m.arch, g.constant(task.clone()));
    int zt = nets::encode(g, m.psi, m.arch, g.constant(tool.clone()));
    int dec = nets::decode(g, m.decoder, m.arch, zt);
    int l_recon = nets::recon_loss(g, dec, g.constant(tool.clone()), mu);
    int l_task = g.softmax_xent(nets::classifier_logits(g, m.classifier, zg, zt), label);
    return g.value(g.add(l_recon, l_task))[0];
  };
  const double err = ad::grad_check(f, flat, analytic);
  // restore original parameter values
  size_t off = 0;
  for (auto* p : params)
    for (int64_t i = 0; i < p->value.numel(); ++i) p->value[i] = flat[off++];
  return err;
}

}  // namespace

GradCheckReport run_gradcheck_suite() {
  GradCheckReport rep;
  Rng rng(12345);

  rep.items.push_back({"linear", check_build({randn({4}, rng), randn({5, 4}, rng), randn({5}, rng)},
                                             [](GD& g, const std::vector<int>& ids) {
                                               return g.mean(g.linear(ids[0], ids[1], ids[2]));
                                             })});
  rep.items.push_back({"conv2d_s1",
                       check_build({randn({3, 6, 6}, rng), randn({4, 3, 5, 5}, rng, 0.3), randn({4}, rng)},
                                   [](GD& g, const std::vector<int>& ids) {
                                     return g.mean(g.conv2d(ids[0], ids[1], ids[2], 1, 2));
                                   })});
  rep.items.push_back({"conv2d_s2",
                       check_build({randn({3, 8, 8}, rng), randn({4, 3, 5, 5}, rng, 0.3), randn({4}, rng)},
                                   [](GD& g, const std::vector<int>& ids) {
                                     return g.mean(g.conv2d(ids[0], ids[1], ids[2], 2, 2));
                                   })});
  rep.items.push_back({"elu", check_build({randn({12}, rng)}, [](GD& g, const std::vector<int>& ids) {
                         return g.mean(g.elu(ids[0]));
                       })});
  rep.items.push_back({"sigmoid", check_build({randn({12}, rng)}, [](GD& g, const std::vector<int>& ids) {
                         return g.mean(g.mul(g.sigmoid(ids[0]), ids[0]));
                       })});
  rep.items.push_back({"add_mul_concat",
                       check_build({randn({6}, rng), randn({6}, rng)},
                                   [](GD& g, const std::vector<int>& ids) {
                                     int c = g.concat(g.add(ids[0], ids[1]), g.mul(ids[0], ids[1]));
                                     return g.mean(g.mul(c, c));
                                   })});
  rep.items.push_back({"softmax", check_build({randn({5}, rng)}, [](GD& g, const std::vector<int>& ids) {
                         return g.mean(g.mul(g.softmax(ids[0]), ids[0]));
                       })});
  rep.items.push_back({"softmax_xent", check_build({randn({2}, rng)}, [](GD& g, const std::vector<int>& ids) {
                         return g.softmax_xent(ids[0], 1);
                       })});
  {
    TD pred({10});
    for (int64_t i = 0; i < pred.numel(); ++i) pred[i] = rng.uniform(0.05, 0.95);
    TD target({10});
    for (int64_t i = 0; i < target.numel(); ++i) target[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    rep.items.push_back({"bce_mean", check_build({pred}, [&](GD& g, const std::vector<int>& ids) {
                           return g.bce_mean(ids[0], g.constant(target.clone()));
                         })});
  }
  rep.items.push_back({"total_variation",
                       check_build({randn({1, 6, 6}, rng)}, [](GD& g, const std::vector<int>& ids) {
                         return g.total_variation(ids[0]);
                       })});
  rep.items.push_back({"mean_reshape",
                       check_build({randn({2, 3, 4}, rng)}, [](GD& g, const std::vector<int>& ids) {
                         return g.mean(g.mul(g.flatten(ids[0]), g.flatten(ids[0])));
                       })});
  rep.items.push_back({"full_miniature_8x8", check_miniature()});
  return rep;
}

}  // namespace reacher
