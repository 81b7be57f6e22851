#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sentipipe/gradcheck.hpp"
#include "sentipipe/ops.hpp"

using namespace sentipipe;

namespace {

// Independent triple-loop reference for matmul.
Mat<double> matmul_reference(const Mat<double>& a, const Mat<double>& b) {
    Mat<double> c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.cols; ++j) {
            double acc = 0.0;
            for (int k = 0; k < a.cols; ++k) acc += a(i, k) * b(k, j);
            c(i, j) = acc;
        }
    return c;
}

Mat<double> random_mat(int rows, int cols, Rng& rng, double scale = 1.0) {
    Mat<double> m(rows, cols);
    for (auto& v : m.data) v = rng.uniform(-scale, scale);
    return m;
}

}  // namespace

TEST_CASE("matmul identity and zero") {
    Mat<double> eye(2, 2);
    eye(0, 0) = eye(1, 1) = 1.0;
    Mat<double> b(2, 2);
    b(0, 0) = 5;
    b(0, 1) = 6;
    b(1, 0) = 7;
    b(1, 1) = 8;
    CHECK(matmul(eye, b) == b);

    Mat<double> zero(3, 2);
    auto prod = matmul(zero, b);
    for (double v : prod.data) CHECK(v == 0.0);
}

TEST_CASE("matmul 2x2 known product") {
    Mat<double> a(2, 2), b(2, 2);
    a(0, 0) = 1;
    a(0, 1) = 2;
    a(1, 0) = 3;
    a(1, 1) = 4;
    b(0, 0) = 5;
    b(0, 1) = 6;
    b(1, 0) = 7;
    b(1, 1) = 8;
    auto c = matmul(a, b);
    CHECK(c(0, 0) == doctest::Approx(19));
    CHECK(c(0, 1) == doctest::Approx(22));
    CHECK(c(1, 0) == doctest::Approx(43));
    CHECK(c(1, 1) == doctest::Approx(50));
    CHECK(c == matmul_reference(a, b));
}

TEST_CASE("matmul matches triple-loop reference on random shapes") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const int m = 1 + static_cast<int>(rng.below(6));
        const int k = 1 + static_cast<int>(rng.below(6));
        const int n = 1 + static_cast<int>(rng.below(6));
        auto a = random_mat(m, k, rng);
        auto b = random_mat(k, n, rng);
        auto got = matmul(a, b);
        auto want = matmul_reference(a, b);
        for (size_t i = 0; i < got.size(); ++i)
            CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("matmul is associative within 1e-9") {
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        auto a = random_mat(4, 3, rng);
        auto b = random_mat(3, 5, rng);
        auto c = random_mat(5, 2, rng);
        auto left = matmul(matmul(a, b), c);
        auto right = matmul(a, matmul(b, c));
        for (size_t i = 0; i < left.size(); ++i)
            CHECK(std::abs(left.data[i] - right.data[i]) < 1e-9);
    }
}

TEST_CASE("matmul rejects dimension mismatch") {
    Mat<double> a(2, 3), b(2, 2);
    CHECK_THROWS_AS(matmul(a, b), std::invalid_argument);
}

TEST_CASE("transposed product helpers agree with explicit transposition") {
    Rng rng(13);
    auto a = random_mat(4, 3, rng);
    auto b = random_mat(4, 5, rng);
    Mat<double> at(3, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 3; ++j) at(j, i) = a(i, j);

    Mat<double> got(3, 5);
    mm_at_b_into(got, a, b, false);
    auto want = matmul_reference(at, b);
    for (size_t i = 0; i < got.size(); ++i)
        CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-12));

    auto c = random_mat(5, 3, rng);
    Mat<double> got2(4, 5);
    Mat<double> ct(3, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 3; ++j) ct(j, i) = c(i, j);
    mm_a_bt_into(got2, a, c, false);
    auto want2 = matmul_reference(a, ct);
    for (size_t i = 0; i < got2.size(); ++i)
        CHECK(got2.data[i] == doctest::Approx(want2.data[i]).epsilon(1e-12));
}

TEST_CASE("tanh_ew basics") {
    Mat<double> x(1, 3);
    x(0, 0) = 0.0;
    x(0, 1) = 20.0;
    x(0, 2) = -20.0;
    auto y = tanh_ew(x);
    CHECK(y(0, 0) == 0.0);
    CHECK(y(0, 1) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(y(0, 2) == doctest::Approx(-1.0).epsilon(1e-9));

    Rng rng(3);
    auto r = random_mat(4, 4, rng, 3.0);
    auto t = tanh_ew(r);
    Mat<double> neg = r;
    for (auto& v : neg.data) v = -v;
    auto tn = tanh_ew(neg);
    for (size_t i = 0; i < t.size(); ++i) {
        CHECK(t.data[i] + tn.data[i] == doctest::Approx(0.0));
        CHECK(t.data[i] > -1.0);
        CHECK(t.data[i] < 1.0);
    }
}

TEST_CASE("hard_sigmoid clamp and midpoint") {
    Mat<double> x(1, 4);
    x(0, 0) = 0.0;
    x(0, 1) = 2.5;
    x(0, 2) = -2.5;
    x(0, 3) = 1.0;
    auto y = hard_sigmoid_ew(x);
    CHECK(y(0, 0) == doctest::Approx(0.5));
    CHECK(y(0, 1) == 1.0);
    CHECK(y(0, 2) == 0.0);
    CHECK(y(0, 3) == doctest::Approx(0.7));
}

TEST_CASE("softmax_rows uniform, analytic and shift-invariant") {
    Mat<double> ones(1, 4);
    ones.fill(1.0);
    auto u = softmax_rows(ones);
    for (double v : u.data) CHECK(v == doctest::Approx(0.25));

    Mat<double> two(1, 2);
    two(0, 0) = 0.0;
    two(0, 1) = std::log(2.0);
    auto s = softmax_rows(two);
    CHECK(s(0, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(s(0, 1) == doctest::Approx(2.0 / 3.0));

    Rng rng(5);
    auto v = random_mat(3, 5, rng, 2.0);
    auto base = softmax_rows(v);
    Mat<double> shifted = v;
    for (auto& e : shifted.data) e += 123.456;
    auto after = softmax_rows(shifted);
    for (size_t i = 0; i < base.size(); ++i)
        CHECK(base.data[i] == doctest::Approx(after.data[i]).epsilon(1e-12));
}

TEST_CASE("softmax_rows stays normalized for huge magnitudes") {
    Mat<double> x(2, 3);
    x(0, 0) = 1e4;
    x(0, 1) = -1e4;
    x(0, 2) = 0.0;
    x(1, 0) = 9999.0;
    x(1, 1) = 10000.0;
    x(1, 2) = -9999.0;
    auto y = softmax_rows(x);
    CHECK(all_finite(y));
    for (int i = 0; i < 2; ++i) {
        double sum = 0.0;
        for (int j = 0; j < 3; ++j) sum += y(i, j);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("cross_entropy analytic values") {
    Mat<double> probs(1, 3);
    probs.fill(1.0 / 3.0);
    auto r = cross_entropy(probs, {1});
    CHECK(r.loss == doctest::Approx(std::log(3.0)).epsilon(1e-9));

    Mat<double> sure(1, 3);
    sure(0, 0) = 1.0;
    auto r2 = cross_entropy(sure, {0});
    CHECK(r2.loss == doctest::Approx(0.0));
}

TEST_CASE("cross_entropy matches scalar-loop oracle on a random 2x3 case") {
    Rng rng(17);
    Mat<double> logits(2, 3);
    for (auto& v : logits.data) v = rng.uniform(-2.0, 2.0);
    auto probs = softmax_rows(logits);
    std::vector<int> targets{2, 0};
    auto got = cross_entropy(probs, targets);

    // independent scalar computation
    double want_loss = 0.0;
    for (int i = 0; i < 2; ++i) want_loss += -std::log(probs(i, targets[static_cast<size_t>(i)]));
    want_loss /= 2.0;
    CHECK(got.loss == doctest::Approx(want_loss).epsilon(1e-12));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j) {
            const double onehot = j == targets[static_cast<size_t>(i)] ? 1.0 : 0.0;
            CHECK(got.grad_logits(i, j) == doctest::Approx((probs(i, j) - onehot) / 2.0).epsilon(1e-12));
        }
}

TEST_CASE("cross_entropy rejects out-of-range targets") {
    Mat<double> probs(1, 3);
    probs.fill(1.0 / 3.0);
    CHECK_THROWS_AS(cross_entropy(probs, {3}), std::invalid_argument);
}

TEST_CASE("dropout degenerate and eval modes") {
    Rng rng(23);
    auto x = random_mat(8, 8, rng);

    Rng r1(1);
    auto keep = dropout(x, 0.0, Mode::Train, r1);
    CHECK(keep.y == x);
    for (double v : keep.mask.data) CHECK(v == 1.0);

    Rng r2(2);
    auto eval = dropout(x, 0.9, Mode::Eval, r2);
    CHECK(eval.y == x);  // bit-exact identity

    CHECK_THROWS_AS(dropout(x, 1.0, Mode::Train, r2), std::invalid_argument);
}

TEST_CASE("dropout preserves the mean at p=0.5") {
    Rng data_rng(29);
    Mat<double> x(400, 250);  // 1e5 elements
    for (auto& v : x.data) v = data_rng.uniform(0.5, 1.5);
    Rng rng(31);
    auto r = dropout(x, 0.5, Mode::Train, rng);
    double mean_x = 0.0, mean_y = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        mean_x += x.data[i];
        mean_y += r.y.data[i];
    }
    mean_x /= static_cast<double>(x.size());
    mean_y /= static_cast<double>(x.size());
    CHECK(std::abs(mean_y - mean_x) / mean_x < 0.02);
}

TEST_CASE("channel-style dropout zeroes whole columns") {
    Mat<double> x = Mat<double>::full(6, 10, 1.0);
    Rng rng(37);
    auto r = dropout(x, 0.4, Mode::Train, rng, DropStyle::Channel);
    for (int j = 0; j < x.cols; ++j) {
        const double first = r.y(0, j);
        CHECK((first == 0.0 || first == doctest::Approx(1.0 / 0.6)));
        for (int i = 1; i < x.rows; ++i) CHECK(r.y(i, j) == first);
    }
}

TEST_CASE("rng is reproducible and shuffle is deterministic") {
    Rng a(123), b(123);
    for (int i = 0; i < 1000; ++i) CHECK(a.next() == b.next());

    std::vector<int> v1{1, 2, 3, 4, 5, 6, 7}, v2 = v1;
    Rng s1(9), s2(9);
    s1.shuffle(v1.begin(), v1.end());
    s2.shuffle(v2.begin(), v2.end());
    CHECK(v1 == v2);

    Rng c(124);
    bool differs = false;
    Rng a2(123);
    for (int i = 0; i < 10; ++i) differs = differs || a2.next() != c.next();
    CHECK(differs);
}

TEST_CASE("derive_rng separates stages") {
    Rng a = derive_rng(42, "teacher-train");
    Rng b = derive_rng(42, "student-noisy");
    CHECK(a.next() != b.next());
    Rng c = derive_rng(42, "teacher-train");
    Rng d = derive_rng(42, "teacher-train");
    CHECK(c.next() == d.next());
}

TEST_CASE("grad_check on a quadratic") {
    std::vector<double> w{3.0};
    std::vector<double> analytic{6.0};
    auto f = [&] { return w[0] * w[0]; };
    double err = grad_check<double>(f, std::span<double>(w), std::span<const double>(analytic), 1e-6);
    CHECK(err < 1e-8);
    CHECK(w[0] == 3.0);  // restored
}

TEST_CASE("grad_check on a constant function") {
    std::vector<double> w{1.0, -2.0};
    std::vector<double> analytic{0.0, 0.0};
    auto f = [] { return 42.0; };
    double err = grad_check<double>(f, std::span<double>(w), std::span<const double>(analytic), 1e-5);
    CHECK(err == 0.0);
}

TEST_CASE("grad_check flags wrong gradients and non-finite losses") {
    std::vector<double> w{2.0};
    std::vector<double> wrong{1.0};  // true gradient is 4
    auto f = [&] { return w[0] * w[0]; };
    double err = grad_check<double>(f, std::span<double>(w), std::span<const double>(wrong), 1e-6);
    CHECK(err > 0.5);

    auto nan_f = [] { return std::numeric_limits<double>::quiet_NaN(); };
    double bad = grad_check<double>(nan_f, std::span<double>(w), std::span<const double>(wrong), 1e-6);
    CHECK(std::isinf(bad));
}
