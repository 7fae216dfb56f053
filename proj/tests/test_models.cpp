#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "citescope/models.hpp"
#include "citescope/rng.hpp"

using namespace citescope;
using models::CnnModel;
using models::DcnnModel;
using models::FunctionExample;
using models::MtlModel;
using models::PairExample;
using nn::Matrix;
using nn::Vector;

namespace {

Matrix random_input(rnd::Rng& rng, int dim, int width) {
  Matrix m(dim, width);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rnd::uniform_real(rng, -1.5, 1.5);
  return m;
}

std::vector<FunctionExample> random_function_batch(rnd::Rng& rng, int n, int dim, int width,
                                                   int classes) {
  std::vector<FunctionExample> out;
  for (int i = 0; i < n; ++i) out.push_back({random_input(rng, dim, width), i % classes});
  return out;
}

std::vector<PairExample> random_pair_batch(rnd::Rng& rng, int n, int dim, int w_citing,
                                           int w_fragment) {
  std::vector<PairExample> out;
  for (int i = 0; i < n; ++i)
    out.push_back({random_input(rng, dim, w_citing), random_input(rng, dim, w_fragment), i % 2});
  return out;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

// Separable toy task: each class plants a constant stripe in its own rows.
std::vector<FunctionExample> striped_function_data(int n, int dim, int width, int classes,
                                                   std::uint64_t seed) {
  rnd::Rng rng = rnd::make_rng(seed, 71);
  std::vector<FunctionExample> out;
  for (int i = 0; i < n; ++i) {
    const int label = i % classes;
    Matrix x = random_input(rng, dim, width) * 0.1;
    x.row(label).array() += 2.0;
    out.push_back({x, label});
  }
  return out;
}

}  // namespace

TEST_CASE("cnn probabilities equal the explicit layer chain") {
  rnd::Rng rng = rnd::make_rng(4, 1);
  const auto m = models::make_cnn(5, 2, 4, 7, 3, 11);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix x = random_input(rng, 4, 7);
    const Vector expected =
        nn::softmax(nn::dense_forward(m.head, nn::max_pool(nn::conv_forward(m.conv, x))));
    CHECK((models::cnn_probs(m, x) - expected).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("dual-tower probabilities concatenate citing before fragment") {
  rnd::Rng rng = rnd::make_rng(4, 2);
  const auto m = models::make_dcnn(3, 2, 4, 6, 5, 12);
  const Matrix citing = random_input(rng, 4, 6);
  const Matrix fragment = random_input(rng, 4, 5);
  Vector joined(6);
  joined.head(3) = nn::max_pool(nn::conv_forward(m.conv_citing, citing));
  joined.tail(3) = nn::max_pool(nn::conv_forward(m.conv_fragment, fragment));
  const Vector expected = nn::softmax(nn::dense_forward(m.head, joined));
  CHECK((models::dcnn_probs(m, citing, fragment) - expected).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("multi-task heads read the shared tower as documented") {
  rnd::Rng rng = rnd::make_rng(4, 3);
  const auto m = models::make_mtl(3, 2, 4, 6, 5, 13);
  const Matrix citing = random_input(rng, 4, 6);
  const Matrix fragment = random_input(rng, 4, 5);

  const Vector pooled_citing = nn::max_pool(nn::conv_forward(m.conv_shared, citing));
  const Vector fn_expected = nn::softmax(nn::dense_forward(m.head_function, pooled_citing));
  CHECK((models::mtl_function_probs(m, citing) - fn_expected).cwiseAbs().maxCoeff() <= 1e-15);

  Vector joined(6);
  joined.head(3) = pooled_citing;
  joined.tail(3) = nn::max_pool(nn::conv_forward(m.conv_fragment, fragment));
  const Vector pv_expected = nn::softmax(nn::dense_forward(m.head_provenance, joined));
  CHECK((models::mtl_provenance_probs(m, citing, fragment) - pv_expected).cwiseAbs().maxCoeff() <=
        1e-15);
}

TEST_CASE("argmax_class prefers the lowest index on ties") {
  Vector p(3);
  p << 0.4, 0.4, 0.2;
  CHECK(models::argmax_class(p) == 0);
  p << 0.1, 0.2, 0.7;
  CHECK(models::argmax_class(p) == 2);
}

TEST_CASE("batch loss is the mean of single-example losses") {
  rnd::Rng rng = rnd::make_rng(4, 4);
  const auto m = models::make_cnn(4, 2, 3, 6, 4, 14);
  const auto data = random_function_batch(rng, 6, 3, 6, 4);
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) sum += models::cnn_loss(m, data, {i});
  CHECK(models::cnn_loss(m, data, all_indices(data.size())) ==
        doctest::Approx(sum / 6.0).epsilon(1e-12));

  const auto dm = models::make_dcnn(4, 2, 3, 6, 5, 15);
  const auto pairs = random_pair_batch(rng, 4, 3, 6, 5);
  double psum = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) psum += models::dcnn_loss(dm, pairs, {i});
  CHECK(models::dcnn_loss(dm, pairs, all_indices(pairs.size())) ==
        doctest::Approx(psum / 4.0).epsilon(1e-12));
}

TEST_CASE("single-example gradients equal the explicit layer backward chain") {
  rnd::Rng rng = rnd::make_rng(4, 5);
  const auto m = models::make_cnn(4, 2, 3, 6, 4, 16);
  const auto data = random_function_batch(rng, 1, 3, 6, 4);

  nn::ConvCache conv_cache;
  nn::PoolCache pool_cache;
  const Matrix act = nn::conv_forward(m.conv, data[0].x, &conv_cache);
  const Vector pooled = nn::max_pool(act, &pool_cache);
  const auto sm = nn::softmax_xent(nn::dense_forward(m.head, pooled), data[0].label);
  const auto dense_grads = nn::dense_backward(m.head, pooled, sm.d_logits);
  const auto conv_grads = nn::conv_backward(
      m.conv, conv_cache, static_cast<int>(data[0].x.cols()),
      nn::max_pool_backward(pool_cache, dense_grads.d_input));

  const auto g = models::cnn_gradients(m, data, {0});
  CHECK(g.loss == doctest::Approx(sm.loss).epsilon(1e-12));
  CHECK((g.d_head_w - dense_grads.d_weights).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((g.d_head_b - dense_grads.d_bias).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((g.d_conv_w - conv_grads.d_weights).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((g.d_conv_b - conv_grads.d_bias).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("batch gradients average the per-example gradients") {
  rnd::Rng rng = rnd::make_rng(4, 6);
  const auto m = models::make_cnn(4, 2, 3, 6, 4, 17);
  const auto data = random_function_batch(rng, 2, 3, 6, 4);
  const auto g0 = models::cnn_gradients(m, data, {0});
  const auto g1 = models::cnn_gradients(m, data, {1});
  const auto g = models::cnn_gradients(m, data, {0, 1});
  CHECK((g.d_conv_w - 0.5 * (g0.d_conv_w + g1.d_conv_w)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((g.d_head_w - 0.5 * (g0.d_head_w + g1.d_head_w)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(g.loss == doctest::Approx(0.5 * (g0.loss + g1.loss)).epsilon(1e-12));
}

TEST_CASE("whole-model analytic gradients pass finite differences") {
  rnd::Rng rng = rnd::make_rng(4, 7);

  SUBCASE("single tower") {
    auto m = models::make_cnn(4, 2, 5, 7, 3, 18);
    const auto data = random_function_batch(rng, 3, 5, 7, 3);
    const auto batch = all_indices(data.size());
    const auto loss_fn = [&](const Vector& theta) {
      CnnModel probe = m;
      models::unpack_cnn(theta, probe);
      return models::cnn_loss(probe, data, batch);
    };
    const auto report = nn::grad_check(loss_fn, models::pack_cnn(m),
                                       models::pack_cnn_grads(models::cnn_gradients(m, data, batch)));
    CHECK(report.max_rel_error < 1e-6);
  }

  SUBCASE("dual tower") {
    auto m = models::make_dcnn(3, 2, 4, 6, 5, 19);
    const auto data = random_pair_batch(rng, 3, 4, 6, 5);
    const auto batch = all_indices(data.size());
    const auto loss_fn = [&](const Vector& theta) {
      DcnnModel probe = m;
      models::unpack_dcnn(theta, probe);
      return models::dcnn_loss(probe, data, batch);
    };
    const auto report = nn::grad_check(
        loss_fn, models::pack_dcnn(m), models::pack_dcnn_grads(models::dcnn_gradients(m, data, batch)));
    CHECK(report.max_rel_error < 1e-6);
  }

  SUBCASE("shared-encoder, both heads") {
    auto m = models::make_mtl(3, 2, 4, 6, 5, 20);
    const auto fn_data = random_function_batch(rng, 3, 4, 6, 4);
    const auto pv_data = random_pair_batch(rng, 3, 4, 6, 5);
    const auto batch = all_indices(3);

    const auto fn_loss = [&](const Vector& theta) {
      MtlModel probe = m;
      models::unpack_mtl(theta, probe);
      return models::mtl_function_loss(probe, fn_data, batch);
    };
    const auto fn_report = nn::grad_check(
        fn_loss, models::pack_mtl(m),
        models::pack_mtl_function_grads(models::mtl_function_gradients(m, fn_data, batch), m));
    CHECK(fn_report.max_rel_error < 1e-6);

    const auto pv_loss = [&](const Vector& theta) {
      MtlModel probe = m;
      models::unpack_mtl(theta, probe);
      return models::mtl_provenance_loss(probe, pv_data, batch);
    };
    const auto pv_report = nn::grad_check(
        pv_loss, models::pack_mtl(m),
        models::pack_mtl_provenance_grads(models::mtl_provenance_gradients(m, pv_data, batch), m));
    CHECK(pv_report.max_rel_error < 1e-6);
  }
}

TEST_CASE("pack and unpack round-trip model parameters") {
  auto a = models::make_mtl(3, 2, 4, 6, 5, 21);
  auto b = models::make_mtl(3, 2, 4, 6, 5, 99);  // different values, same shapes
  models::unpack_mtl(models::pack_mtl(a), b);
  CHECK(models::checksum(a.conv_shared) == models::checksum(b.conv_shared));
  CHECK(models::checksum(a.conv_fragment) == models::checksum(b.conv_fragment));
  CHECK(models::checksum(a.head_function) == models::checksum(b.head_function));
  CHECK(models::checksum(a.head_provenance) == models::checksum(b.head_provenance));
  CHECK(models::pack_mtl(a) == models::pack_mtl(b));
}

TEST_CASE("task steps touch only their own tensors and accumulators") {
  rnd::Rng rng = rnd::make_rng(4, 8);
  auto m = models::make_mtl(4, 2, 5, 7, 6, 22);
  auto st = models::make_opt_state(m);
  const auto fn_data = random_function_batch(rng, 6, 5, 7, 4);
  const auto pv_data = random_pair_batch(rng, 6, 5, 7, 6);
  const auto batch = all_indices(6);

  const std::string frag_before = models::checksum(m.conv_fragment);
  const std::string pv_head_before = models::checksum(m.head_provenance);
  const std::string frag_acc_before = models::checksum(st.fragment);
  const std::string pv_acc_before = models::checksum(st.provenance_head);
  const std::string shared_before = models::checksum(m.conv_shared);
  const std::string fn_head_before = models::checksum(m.head_function);

  models::mtl_function_step(m, st, fn_data, batch, {});
  CHECK(models::checksum(m.conv_fragment) == frag_before);
  CHECK(models::checksum(m.head_provenance) == pv_head_before);
  CHECK(models::checksum(st.fragment) == frag_acc_before);
  CHECK(models::checksum(st.provenance_head) == pv_acc_before);
  CHECK(models::checksum(m.conv_shared) != shared_before);
  CHECK(models::checksum(m.head_function) != fn_head_before);

  const std::string fn_head_mid = models::checksum(m.head_function);
  const std::string fn_acc_mid = models::checksum(st.function_head);
  models::mtl_provenance_step(m, st, pv_data, batch, {});
  CHECK(models::checksum(m.head_function) == fn_head_mid);
  CHECK(models::checksum(st.function_head) == fn_acc_mid);
  CHECK(models::checksum(m.conv_fragment) != frag_before);
  CHECK(models::checksum(m.head_provenance) != pv_head_before);
}

TEST_CASE("interleaved training cycles the shorter stream") {
  rnd::Rng rng = rnd::make_rng(4, 9);
  auto m = models::make_mtl(3, 2, 4, 6, 5, 23);
  const auto fn_data = random_function_batch(rng, 10, 4, 6, 4);  // 5 batches of 2
  const auto pv_data = random_pair_batch(rng, 6, 4, 6, 5);       // 3 batches of 2
  models::TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 2;
  const auto history = models::train_mtl(m, fn_data, pv_data, cfg);
  CHECK(history.steps_per_epoch == 5);
  REQUIRE(history.epoch_mean_loss.size() == 2);
  for (const double loss : history.epoch_mean_loss) CHECK(std::isfinite(loss));
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto data = striped_function_data(24, 6, 8, 4, 31);
  models::TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  cfg.seed = 77;

  auto a = models::make_cnn(6, 3, 6, 8, 4, 77);
  auto b = models::make_cnn(6, 3, 6, 8, 4, 77);
  const auto ha = models::train_cnn(a, data, cfg);
  const auto hb = models::train_cnn(b, data, cfg);
  CHECK(models::checksum(a.conv) == models::checksum(b.conv));
  CHECK(models::checksum(a.head) == models::checksum(b.head));
  CHECK(ha.epoch_mean_loss == hb.epoch_mean_loss);

  auto c = models::make_cnn(6, 3, 6, 8, 4, 78);  // different init seed diverges
  models::train_cnn(c, data, cfg);
  CHECK(models::checksum(a.conv) != models::checksum(c.conv));
}

TEST_CASE("loss falls on a separable toy problem") {
  const auto data = striped_function_data(32, 6, 8, 4, 32);
  auto m = models::make_cnn(8, 3, 6, 8, 4, 33);
  models::TrainConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size = 8;
  cfg.seed = 34;
  cfg.opt.lr = 0.02;  // the default crawls on a 160-step toy run
  const auto history = models::train_cnn(m, data, cfg);
  REQUIRE(history.epoch_mean_loss.size() == 20);
  CHECK(history.epoch_mean_loss.back() < 0.1 * history.epoch_mean_loss.front());
  int correct = 0;
  for (const auto& ex : data)
    if (models::argmax_class(models::cnn_probs(m, ex.x)) == ex.label) ++correct;
  CHECK(correct >= 30);
}

TEST_CASE("checkpoints round-trip models bit-exactly") {
  rnd::Rng rng = rnd::make_rng(4, 10);
  const auto dir = std::filesystem::temp_directory_path() / "citescope_model_tests";
  std::filesystem::create_directories(dir);

  SUBCASE("single tower") {
    const auto m = models::make_cnn(4, 2, 3, 6, 4, 24);
    models::CheckpointDoc doc;
    doc.kind = "cnn";
    doc.meta = {{"window", 2}, {"input_width", 6}};
    doc.tensors = models::cnn_tensors(m);
    models::save_checkpoint(dir / "cnn.json", doc);
    const auto loaded = models::load_checkpoint(dir / "cnn.json");
    CHECK(loaded.kind == "cnn");
    CHECK(loaded.meta.at("window").get<int>() == 2);
    const auto restored = models::cnn_from_tensors(loaded.tensors, 2, 6);
    CHECK(models::checksum(restored.conv) == models::checksum(m.conv));
    CHECK(models::checksum(restored.head) == models::checksum(m.head));
    const Matrix x = random_input(rng, 3, 6);
    CHECK(models::cnn_probs(restored, x) == models::cnn_probs(m, x));
  }

  SUBCASE("dual tower and shared-encoder") {
    const auto dm = models::make_dcnn(3, 2, 4, 6, 5, 25);
    models::CheckpointDoc doc;
    doc.kind = "dcnn";
    doc.tensors = models::dcnn_tensors(dm);
    models::save_checkpoint(dir / "dcnn.json", doc);
    const auto restored =
        models::dcnn_from_tensors(models::load_checkpoint(dir / "dcnn.json").tensors, 2, 6, 5);
    CHECK(models::checksum(restored.conv_citing) == models::checksum(dm.conv_citing));
    CHECK(models::checksum(restored.conv_fragment) == models::checksum(dm.conv_fragment));
    CHECK(models::checksum(restored.head) == models::checksum(dm.head));

    const auto mm = models::make_mtl(3, 2, 4, 6, 5, 26);
    models::CheckpointDoc mdoc;
    mdoc.kind = "mtl";
    mdoc.tensors = models::mtl_tensors(mm);
    models::save_checkpoint(dir / "mtl.json", mdoc);
    const auto mrestored =
        models::mtl_from_tensors(models::load_checkpoint(dir / "mtl.json").tensors, 2, 6, 5);
    CHECK(models::checksum(mrestored.conv_shared) == models::checksum(mm.conv_shared));
    CHECK(models::checksum(mrestored.head_provenance) == models::checksum(mm.head_provenance));
  }
}

TEST_CASE("loss and gradient calls reject out-of-range batch indices") {
  rnd::Rng rng = rnd::make_rng(4, 11);
  const auto m = models::make_cnn(4, 2, 3, 6, 4, 27);
  const auto data = random_function_batch(rng, 2, 3, 6, 4);
  CHECK_THROWS(models::cnn_loss(m, data, {5}));
  CHECK_THROWS(models::cnn_gradients(m, data, {}));
}
