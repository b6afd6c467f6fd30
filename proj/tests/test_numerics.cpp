#include <doctest.h>

#include <cstring>
#include <sstream>

#include "cbm/numerics/adam.hpp"
#include "cbm/numerics/chain.hpp"
#include "cbm/numerics/serialize.hpp"
#include "support/gradcheck.hpp"

using namespace cbm;
using namespace cbm::numerics;
using cbm::testing::random_matrix;

TEST_CASE("matmul small products")
{
  Tensor2 a(1, 1), b(1, 1);
  a << 2;
  b << 3;
  CHECK(matmul(a, b)(0, 0) == 6.0);

  Rng rng(1);
  Tensor2 m = random_matrix(2, 2, rng);
  Tensor2 const eye = Tensor2::Identity(2, 2);
  CHECK(matmul(eye, m) == m);

  Tensor2 x(2, 2), y(2, 1);
  x << 1, 2, 3, 4;
  y << 5, 6;
  Tensor2 const z = matmul(x, y);
  REQUIRE(z.rows() == 2);
  REQUIRE(z.cols() == 1);
  CHECK(z(0, 0) == 17.0);
  CHECK(z(1, 0) == 39.0);
}

TEST_CASE("matmul rejects mismatched shapes")
{
  Tensor2 a(2, 3), b(2, 3);
  a.setZero();
  b.setZero();
  CHECK_THROWS_AS(matmul(a, b), DimensionError);
}

TEST_CASE("matmul is associative on random conformable triples")
{
  Rng rng(7);
  std::uniform_int_distribution<int> dim(1, 8);
  for (int trial = 0; trial < 200; ++trial) {
    int const p = dim(rng), q = dim(rng), r = dim(rng), s = dim(rng);
    Tensor2 a = random_matrix(p, q, rng), b = random_matrix(q, r, rng), c = random_matrix(r, s, rng);
    Tensor2 const left = matmul(matmul(a, b), c);
    Tensor2 const right = matmul(a, matmul(b, c));
    double const scale = std::max(1.0, right.cwiseAbs().maxCoeff());
    CHECK((left - right).cwiseAbs().maxCoeff() / scale <= 1e-9);
  }
}

TEST_CASE("affine_forward")
{
  Rng rng(3);
  Parameter w(random_matrix(1, 1, rng));
  Matrix<double> bias(1, 1);
  bias << 2.5;
  Parameter b(bias);
  Tensor2 zero = Tensor2::Zero(1, 1);
  CHECK(affine_forward(zero, w, b)(0, 0) == 2.5);

  Tensor2 ones = Tensor2::Ones(1, 2);
  Parameter w2(Tensor2::Ones(2, 1));
  Parameter b2(Tensor2::Zero(1, 1));
  CHECK(affine_forward(ones, w2, b2)(0, 0) == 2.0);

  Parameter w3(random_matrix(4, 5, rng));
  Parameter b3(random_matrix(1, 5, rng));
  Tensor2 const batch = random_matrix(3, 4, rng);
  Tensor2 const y = affine_forward(batch, w3, b3);
  CHECK(y.rows() == 3);
  CHECK(y.cols() == 5);
  CHECK_THROWS_AS(affine_forward(random_matrix(3, 2, rng), w3, b3), DimensionError);
}

TEST_CASE("relu")
{
  Tensor2 x(1, 3);
  x << -1, 0, 2;
  Tensor2 const y = relu(x);
  CHECK(y(0, 0) == 0.0);
  CHECK(y(0, 1) == 0.0);
  CHECK(y(0, 2) == 2.0);

  Tensor2 neg = -Tensor2::Ones(2, 3);
  CHECK(relu(neg).isZero());

  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor2 r = random_matrix(4, 4, rng);
    Tensor2 const once = relu(r);
    CHECK(relu(once) == once);
    for (Index i = 0; i < r.size(); ++i) {
      CHECK(once.data()[i] >= 0.0);
      if (r.data()[i] >= 0.0) {
        CHECK(once.data()[i] <= r.data()[i]);
      }
    }
  }
}

TEST_CASE("single affine layer, loss = sum(output)")
{
  Rng rng(5);
  Linear<double> layer(3, 2, rng);
  Tensor2 const x = random_matrix(4, 3, rng);
  Tensor2 const ones = Tensor2::Ones(4, 2);
  layer.backward(x, ones);
  // d sum(xW + b)/db_j = batch size; per sample it is all-ones.
  CHECK(layer.bias().grad.isApprox(Tensor2::Constant(1, 2, 4.0)));
  Tensor2 const expected_w = x.transpose() * ones;
  CHECK((layer.weight().grad - expected_w).cwiseAbs().maxCoeff() < 1e-12);

  Linear<double> single(3, 2, rng);
  single.backward(x.topRows(1), Tensor2::Ones(1, 2));
  CHECK(single.bias().grad == Tensor2::Ones(1, 2));
}

TEST_CASE("backward accumulates until zeroed")
{
  Rng rng(9);
  Linear<double> layer(2, 2, rng);
  Tensor2 const x = random_matrix(1, 2, rng);
  Tensor2 const g = Tensor2::Ones(1, 2);
  layer.backward(x, g);
  Tensor2 const once = layer.weight().grad;
  layer.backward(x, g);
  CHECK((layer.weight().grad - 2.0 * once).cwiseAbs().maxCoeff() < 1e-12);
  layer.weight().zero_grad();
  CHECK(layer.weight().grad.isZero());
}

TEST_CASE("chain backward rejects a foreign tape")
{
  Rng rng(2);
  Chain<double> chain;
  chain.add_linear(3, 4, Activation::kRelu, rng);
  chain.add_linear(4, 2, Activation::kNone, rng);
  Tape<double> tape;
  Tensor2 const x = random_matrix(5, 3, rng);
  chain.forward(x, Mode::kEval, nullptr, tape);
  CHECK_THROWS_AS(chain.backward(Tensor2::Ones(5, 3), tape), DimensionError);
  CHECK_THROWS_AS(chain.backward(Tensor2::Ones(4, 2), tape), DimensionError);
  Tape<double> empty;
  CHECK_THROWS_AS(chain.backward(Tensor2::Ones(5, 2), empty), DimensionError);
}

namespace {

// loss = sum(R .* chain(x)) for a fixed random R.
struct ChainFixture
{
  Chain<double> chain;
  Tensor2 x;
  Tensor2 weights;
  Rng noise_seed;

  double loss()
  {
    Rng r = noise_seed;
    chain.resample_noise(r);
    Tape<double> tape;
    return chain.forward(x, Mode::kEval, nullptr, tape).cwiseProduct(weights).sum();
  }
};

} // namespace

TEST_CASE("gradient check: Linear, NoisyLinear and two-layer chains")
{
  Rng rng(2024);
  std::uniform_int_distribution<int> dim(1, 8);
  std::bernoulli_distribution coin(0.5);
  double worst = 0.0;
  int trials = 0;
  for (int trial = 0; trial < 120; ++trial) {
    ChainFixture f;
    int const in = dim(rng), hidden = dim(rng), out = dim(rng), batch = dim(rng);
    int const kind = trial % 3; // 0: Linear, 1: NoisyLinear, 2: two chained layers
    if (kind == 0) {
      f.chain.add_linear(in, out, coin(rng) ? Activation::kRelu : Activation::kNone, rng);
    } else if (kind == 1) {
      f.chain.add_noisy(in, out, Activation::kNone, 0.5, rng);
    } else {
      f.chain.add_linear(in, hidden, Activation::kRelu, rng);
      if (coin(rng)) {
        f.chain.add_noisy(hidden, out, Activation::kNone, 0.5, rng);
      } else {
        f.chain.add_linear(hidden, out, Activation::kNone, rng);
      }
    }
    f.x = random_matrix(batch, in, rng);
    f.weights = random_matrix(batch, out, rng);
    f.noise_seed = Rng(rng());

    Rng r = f.noise_seed;
    f.chain.resample_noise(r);
    Tape<double> tape;
    f.chain.forward(f.x, Mode::kEval, nullptr, tape);
    auto params = f.chain.parameters();
    for (auto *p : params) {
      p->zero_grad();
    }
    Tensor2 const grad_x = f.chain.backward(f.weights, tape);

    auto const pr = cbm::testing::check_parameter_grads(params, [&] { return f.loss(); });
    auto const ir = cbm::testing::check_input_grads(f.x, grad_x, [&] { return f.loss(); });
    worst = std::max({worst, pr.worst, ir.worst});
    CHECK(pr.worst <= cbm::testing::kFdTolerance);
    CHECK(ir.worst <= cbm::testing::kFdTolerance);
    ++trials;
  }
  CHECK(trials >= 100);
  MESSAGE("worst relative error " << worst);
}

TEST_CASE("noisy layer with zero noise equals a plain affine layer")
{
  Rng rng(13);
  NoisyLinear<double> noisy(4, 3, 0.5, rng);
  noisy.zero_noise();
  Tensor2 const x = random_matrix(6, 4, rng);
  Tensor2 const expected = x * noisy.parameters()[0]->value + Tensor2::Ones(6, 1) * noisy.parameters()[2]->value;
  CHECK((noisy.forward(x) - expected).cwiseAbs().maxCoeff() < 1e-12);
  // sigma starts at sigma_init / sqrt(fan_in)
  CHECK(noisy.parameters()[1]->value.isApprox(Tensor2::Constant(4, 3, 0.25)));
}

TEST_CASE("dropout is active only in train mode and rescales kept units")
{
  Rng rng(17);
  Chain<double> chain;
  chain.add_linear(3, 200, Activation::kNone, rng, 0.5);
  Tensor2 const x = random_matrix(1, 3, rng);
  Tape<double> tape;
  Tensor2 const eval = chain.forward(x, Mode::kEval, nullptr, tape);
  Rng drop(3);
  Tensor2 const train = chain.forward(x, Mode::kTrain, &drop, tape);
  int kept = 0;
  for (Index j = 0; j < train.cols(); ++j) {
    if (train(0, j) != 0.0) {
      ++kept;
      CHECK(train(0, j) == doctest::Approx(2.0 * eval(0, j)));
    }
  }
  CHECK(kept > 50);
  CHECK(kept < 150);
  CHECK_THROWS(chain.forward(x, Mode::kTrain, nullptr, tape));
}

TEST_CASE("adam: zero gradient is a fixed point")
{
  Rng rng(1);
  Parameter p(random_matrix(3, 3, rng));
  Tensor2 const before = p.value;
  std::vector<Parameter *> ps{&p};
  for (long t = 1; t <= 10; ++t) {
    adam_step<double>(ps, AdamConfig{}, t);
  }
  CHECK(p.value == before);
}

TEST_CASE("adam: constant gradient moves against its sign")
{
  Parameter p(Tensor2::Zero(1, 2));
  std::vector<Parameter *> ps{&p};
  for (long t = 1; t <= 50; ++t) {
    p.grad << 1.0, -2.0;
    adam_step<double>(ps, AdamConfig{}, t);
  }
  CHECK(p.value(0, 0) < 0.0);
  CHECK(p.value(0, 1) > 0.0);
  CHECK(p.grad.isZero());
  CHECK((p.adam_v.array() >= 0.0).all());
}

TEST_CASE("adam: first bias-corrected step")
{
  // Hand evaluation: m = 0.1, v = 0.001; m_hat = 1, v_hat = 1; step = lr / (1 + eps).
  double const lr = 0.001, eps = 1e-8;
  double const expected = -lr * 1.0 / (std::sqrt(1.0) + eps);
  Parameter p(Tensor2::Zero(1, 1));
  p.grad(0, 0) = 1.0;
  std::vector<Parameter *> ps{&p};
  adam_step<double>(ps, AdamConfig{lr, 0.9, 0.999, eps}, 1);
  CHECK(p.value(0, 0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(p.value(0, 0) == doctest::Approx(-0.001).epsilon(1e-6));
}

TEST_CASE("adam: non-finite gradient is surfaced and nothing moves")
{
  Parameter a(Tensor2::Zero(1, 1));
  Parameter b(Tensor2::Zero(1, 1));
  a.grad(0, 0) = 1.0;
  b.grad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  std::vector<Parameter *> ps{&a, &b};
  CHECK_THROWS_AS(adam_step<double>(ps, AdamConfig{}, 1), TrainingError);
  CHECK(a.value(0, 0) == 0.0);
  CHECK_THROWS(adam_step<double>(ps, AdamConfig{}, 0));
}

TEST_CASE("gradient norm clipping")
{
  Parameter a(Tensor2::Zero(1, 2));
  a.grad << 3.0, 4.0;
  std::vector<Parameter *> ps{&a};
  double const norm = clip_grad_norm<double>(ps, 1.0);
  CHECK(norm == doctest::Approx(5.0));
  CHECK(a.grad.norm() == doctest::Approx(1.0));
  a.grad << 0.3, 0.4;
  clip_grad_norm<double>(ps, 1.0);
  CHECK(a.grad(0, 0) == doctest::Approx(0.3));
}

TEST_CASE("parameter serialization round trip is bit-exact")
{
  Rng rng(99);
  std::vector<Tensor2> tensors{random_matrix(3, 4, rng), random_matrix(1, 7, rng), Tensor2(0, 0)};
  tensors[0](0, 0) = -0.0;
  tensors[0](1, 1) = std::numeric_limits<double>::denorm_min();
  std::vector<Tensor2 const *> ptrs;
  for (auto const &t : tensors) {
    ptrs.push_back(&t);
  }
  std::stringstream buf;
  write_parameters(buf, ptrs);
  auto const back = read_parameters(buf);
  REQUIRE(back.size() == tensors.size());
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    REQUIRE(back[i].rows() == tensors[i].rows());
    REQUIRE(back[i].cols() == tensors[i].cols());
    CHECK(std::memcmp(back[i].data(), tensors[i].data(), sizeof(double) * tensors[i].size()) == 0);
  }
}

TEST_CASE("parameter block layout is little-endian")
{
  Tensor2 t(1, 1);
  t(0, 0) = 1.0;
  std::vector<Tensor2 const *> ptrs{&t};
  std::stringstream buf;
  write_parameters(buf, ptrs);
  std::string const bytes = buf.str();
  REQUIRE(bytes.size() == 4 + 4 + 4 + 4 + 8);
  CHECK(bytes[0] == 1); // format version
  CHECK(bytes[4] == 1); // tensor count
  CHECK(static_cast<unsigned char>(bytes[23]) == 0x3F); // 1.0 = 0x3FF0000000000000
  CHECK(static_cast<unsigned char>(bytes[22]) == 0xF0);
}

TEST_CASE("parameter block rejects truncation and bad versions")
{
  Tensor2 t = Tensor2::Ones(2, 2);
  std::vector<Tensor2 const *> ptrs{&t};
  std::stringstream buf;
  write_parameters(buf, ptrs);
  std::string bytes = buf.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_parameters(truncated), FormatError);
  bytes[0] = 9;
  std::stringstream bad(bytes);
  CHECK_THROWS_AS(read_parameters(bad), FormatError);
}
