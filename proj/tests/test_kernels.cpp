#include <doctest.h>

#include <cmath>
#include <vector>

#include "lane/kernels.hpp"
#include "lane/rng.hpp"

using lane::kernels::Ops;

namespace {

std::vector<double> random_vec(lane::Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

}  // namespace

TEST_CASE("scalar kernels match naive arithmetic") {
  const Ops& k = lane::kernels::scalar();
  std::vector<double> a = {1.0, 2.0, -0.5};
  std::vector<double> b = {3.0, 4.0, 2.0};

  CHECK(k.dot(a.data(), b.data(), 2) == doctest::Approx(11.0));  // 1*3 + 2*4
  CHECK(k.dot(a.data(), b.data(), 3) == doctest::Approx(10.0));

  std::vector<double> y = {1.0, 1.0, 1.0};
  k.axpy(y.data(), 2.0, a.data(), 3);
  CHECK(y[0] == doctest::Approx(3.0));
  CHECK(y[2] == doctest::Approx(0.0));

  // 2x3 matrix times 3-vector
  std::vector<double> w = {1, 0, 2, -1, 3, 0.5};
  std::vector<double> x = {2, 1, -1};
  std::vector<double> out(2);
  k.matvec(out.data(), w.data(), x.data(), 2, 3);
  CHECK(out[0] == doctest::Approx(0.0));
  CHECK(out[1] == doctest::Approx(0.5));
}

TEST_CASE("avx2 lane agrees with the scalar reference") {
  const Ops* vec = lane::kernels::avx2();
  if (vec == nullptr) {
    MESSAGE("avx2 lane unavailable on this host; skipping equivalence");
    return;
  }
  const Ops& ref = lane::kernels::scalar();
  lane::Rng rng(7);

  for (std::size_t n : {1u, 3u, 4u, 5u, 17u, 64u, 127u, 128u, 300u}) {
    auto a = random_vec(rng, n);
    auto b = random_vec(rng, n);

    CHECK(vec->dot(a.data(), b.data(), n) ==
          doctest::Approx(ref.dot(a.data(), b.data(), n)).epsilon(1e-12));

    auto y1 = random_vec(rng, n);
    auto y2 = y1;
    ref.axpy(y1.data(), 1.37, a.data(), n);
    vec->axpy(y2.data(), 1.37, a.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-12));
    }

    auto o1 = random_vec(rng, n);
    auto o2 = o1;
    ref.mul(o1.data(), a.data(), b.data(), n);
    vec->mul(o2.data(), a.data(), b.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(o1[i] == o2[i]);

    ref.add(o1.data(), a.data(), b.data(), n);
    vec->add(o2.data(), a.data(), b.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(o1[i] == o2[i]);

    ref.sub(o1.data(), a.data(), b.data(), n);
    vec->sub(o2.data(), a.data(), b.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(o1[i] == o2[i]);

    ref.scale(o1.data(), a.data(), -0.25, n);
    vec->scale(o2.data(), a.data(), -0.25, n);
    for (std::size_t i = 0; i < n; ++i) CHECK(o1[i] == o2[i]);
  }

  // matvec / transposed accumulate / outer on odd shapes
  for (auto [rows, cols] : std::vector<std::pair<std::size_t, std::size_t>>{
           {1, 1}, {3, 5}, {16, 16}, {5, 129}, {64, 33}}) {
    auto w = random_vec(rng, rows * cols);
    auto x = random_vec(rng, cols);
    auto gy = random_vec(rng, rows);

    std::vector<double> y1(rows), y2(rows);
    ref.matvec(y1.data(), w.data(), x.data(), rows, cols);
    vec->matvec(y2.data(), w.data(), x.data(), rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
      CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-12));
    }

    auto gx1 = random_vec(rng, cols);
    auto gx2 = gx1;
    ref.matvec_t_acc(gx1.data(), w.data(), gy.data(), rows, cols);
    vec->matvec_t_acc(gx2.data(), w.data(), gy.data(), rows, cols);
    for (std::size_t i = 0; i < cols; ++i) {
      CHECK(gx1[i] == doctest::Approx(gx2[i]).epsilon(1e-12));
    }

    auto gw1 = random_vec(rng, rows * cols);
    auto gw2 = gw1;
    ref.outer_acc(gw1.data(), gy.data(), x.data(), rows, cols);
    vec->outer_acc(gw2.data(), gy.data(), x.data(), rows, cols);
    for (std::size_t i = 0; i < rows * cols; ++i) {
      CHECK(gw1[i] == doctest::Approx(gw2[i]).epsilon(1e-12));
    }
  }

  // adadelta recurrence, a few chained steps
  const std::size_t n = 37;
  auto x1 = random_vec(rng, n);
  auto x2 = x1;
  std::vector<double> eg2a(n, 0), ed2a(n, 0), eg2b(n, 0), ed2b(n, 0);
  for (int step = 0; step < 5; ++step) {
    auto g = random_vec(rng, n);
    ref.adadelta(x1.data(), eg2a.data(), ed2a.data(), g.data(), n, 0.95, 1e-6, 0.7);
    vec->adadelta(x2.data(), eg2b.data(), ed2b.data(), g.data(), n, 0.95, 1e-6, 0.7);
  }
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(x1[i] == doctest::Approx(x2[i]).epsilon(1e-12));
    CHECK(eg2a[i] == doctest::Approx(eg2b[i]).epsilon(1e-12));
    CHECK(ed2a[i] == doctest::Approx(ed2b[i]).epsilon(1e-12));
  }
}

TEST_CASE("dispatch honors overrides and reports a usable lane") {
  lane::kernels::set_active("scalar");
  CHECK(std::string(lane::kernels::active().name) == "scalar");
  CHECK_THROWS(lane::kernels::set_active("no-such-lane"));
  lane::kernels::set_active("auto");
  const char* name = lane::kernels::active().name;
  CHECK((std::string(name) == "scalar" || std::string(name) == "avx2"));
}
