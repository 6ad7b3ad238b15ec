#include <cmath>
#include <limits>

#include "doctest.h"
#include "osteoplan/analysis.hpp"
#include "osteoplan/errors.hpp"
#include "osteoplan/evaluator.hpp"
#include "osteoplan/external_evaluator.hpp"
#include "osteoplan/objective.hpp"

using namespace osteoplan;

namespace {

FeasibleRegion generic1() { return {25, 25, 20, 20, 3.5, std::nullopt}; }
FeasibleRegion rb_region() { return {25, 25, 15, 15, 5, 7.0}; }

SyntheticModelConfig config_for(const DesignVector& star) {
  SyntheticModelConfig c;
  c.phi_star = star;
  return c;
}

DesignVector star1() { return DesignVector::from_vector({12.5, -12.5, -10, 10, 1.75}); }

double total_average(const EvaluationResult& r) {
  double s = 0;
  for (double a : interface_averages(r)) s += a;
  return s;
}

}  // namespace

TEST_SUITE("evaluator") {
  TEST_CASE("determinism and shape") {
    const SyntheticEvaluator ev(generic1(), config_for(star1()));
    const DesignVector phi = DesignVector::from_vector({1, 2, 3, 4, 0.5});
    const auto a = ev.evaluate(phi);
    const auto b = ev.evaluate(phi);
    CHECK(a == b);
    CHECK(a.steps == 62);
    CHECK(a.apposition_left.size() == 62);
    CHECK(a.sf_right.size() == 62);
    CHECK_FALSE(a.has_middle());
    CHECK_NOTHROW(a.validate());
    CHECK_THROWS_AS(ev.evaluate(DesignVector::from_vector({26, 0, 0, 0, 0})), Error);
    CHECK(ev.step_time(31) == doctest::Approx(0.5));

    const SyntheticEvaluator rb(rb_region(), config_for(DesignVector::from_vector({12.5, 12.5, -7.5, 7.5, 2.5, -3.5})));
    const auto r = rb.evaluate(DesignVector::baseline(2));
    CHECK(r.has_middle());
    CHECK(r.interfaces().size() == 3);
  }

  TEST_CASE("penetration") {
    SyntheticModelConfig c = config_for(star1());
    c.bolus_boost = 0.0;
    const SyntheticEvaluator ev(generic1(), c);
    CHECK(ev.element_penetration(star1(), Interface::Left, 0, 0.5) == doctest::Approx(c.peak_gap_mm).epsilon(1e-15));
    CHECK(ev.element_penetration(star1(), Interface::Left, 17, 0.0) == 0.0);

    SyntheticModelConfig far = config_for(DesignVector::from_vector({25, -25, 20, -20, 3.5}));
    const SyntheticEvaluator ev2(generic1(), far);
    const DesignVector opposite = DesignVector::from_vector({-25, 25, -20, 20, -3.5});
    REQUIRE(ev2.misalignment(opposite, Interface::Left) > far.peak_gap_mm);
    for (std::size_t i = 0; i < 62; ++i) {
      const double t = ev2.step_time(i);
      if (t >= far.bolus_start && t <= far.bolus_end) continue;
      for (std::size_t e = 0; e < 200; e += 13) CHECK(ev2.element_penetration(opposite, Interface::Left, e, t) == 0.0);
    }

    // clip below the layer thickness
    SyntheticModelConfig deep = config_for(star1());
    deep.peak_gap_mm = 0.19;
    const SyntheticEvaluator ev3(generic1(), deep);
    CHECK(ev3.element_penetration(star1(), Interface::Right, 3, 0.5) == doctest::Approx(0.995 * 0.2));
  }

  TEST_CASE("element stimulus") {
    SyntheticModelConfig c = config_for(star1());
    c.load_gain = 1.0;
    const SyntheticEvaluator ev(generic1(), c);
    const auto zero = ev.sample_at_depth(0.0, BoneRegion::Cancellous);
    CHECK(zero.stimulus == 0.0);
    CHECK(zero.max_principal == 0.0);

    const double k = 0.7 * 30.0 / (1.3 * 0.4);
    const double p_kpa = k * std::log(2.0);
    const double p_mpa = p_kpa / 1000.0;
    const double sed_oracle = p_mpa * p_mpa / (2.0 * 1.1e3);  // MPa^2 / MPa
    const double rho = 0.7;
    const auto s = ev.sample_at_depth(0.1, BoneRegion::Cancellous);
    CHECK(s.max_principal == doctest::Approx(p_mpa).epsilon(1e-13));
    CHECK(s.stimulus == doctest::Approx(sed_oracle / (rho * 1e-3)).epsilon(1e-13));

    const auto cort = ev.sample_at_depth(0.1, BoneRegion::Cortical);
    const double ratio = (1.1 / 13.7) * (0.7 / hu_to_density(1600));
    CHECK(cort.stimulus / s.stimulus == doctest::Approx(ratio).epsilon(1e-13));
    CHECK(cort.max_principal == s.max_principal);
  }

  TEST_CASE("assembly") {
    auto make = [](double stim) {
      ElementField f;
      f.elements_per_interface = 4;
      f.samples.assign(2, std::vector<InterfaceSamples>(3, InterfaceSamples(4)));
      for (auto& iface : f.samples)
        for (auto& step : iface)
          for (auto& e : step) e.stimulus = stim;
      return f;
    };
    const StimulusParams p;
    auto low = assemble_result(make(0.01), p, 100, 5);
    CHECK(cycle_average(low.apposition_left) == 0.0);
    CHECK(std::isinf(low.sf_left[0]));
    auto high = assemble_result(make(0.05), p, 100, 5);
    CHECK(cycle_average(high.apposition_right) == 1.0);

    ElementField half = make(0.01);
    for (auto& step : half.samples[0]) {
      step[1].stimulus = 0.05;
      step[3].stimulus = 0.0397;
      step[2].stimulus = 0.0396;  // boundary does not count
      step[0].region = BoneRegion::Cortical;
      step[0].max_principal = 50;
      step[1].max_principal = 1;
    }
    const auto r = assemble_result(half, p, 100, 5);
    CHECK(r.apposition_left == std::vector<double>(3, 0.5));
    CHECK(r.sf_left[0] == 2.0);

    ElementField empty = make(0.0);
    empty.samples[1][2].clear();
    CHECK_THROWS_AS(assemble_result(empty, p, 100, 5), Error);
  }

  TEST_CASE("axis sweeps are unimodal") {
    const SyntheticEvaluator ev(generic1(), config_for(star1()));
    const auto star = star1().to_vector();
    const auto w = generic1().half_widths();
    for (std::size_t c = 0; c < 5; ++c) {
      std::vector<double> vals;
      for (int i = 0; i <= 40; ++i) {
        auto v = star;
        v[c] = -w[c] + 2.0 * w[c] * i / 40.0;
        vals.push_back(total_average(ev.evaluate(DesignVector::from_vector(v))));
      }
      // nondecreasing up to the peak, nonincreasing after
      std::size_t peak = 0;
      for (std::size_t i = 1; i < vals.size(); ++i)
        if (vals[i] > vals[peak]) peak = i;
      for (std::size_t i = 1; i <= peak; ++i) CHECK(vals[i] >= vals[i - 1]);
      for (std::size_t i = peak + 1; i < vals.size(); ++i) CHECK(vals[i] <= vals[i - 1]);
      const double at_star = total_average(ev.evaluate(star1()));
      CHECK(vals[peak] == at_star);
    }
  }

  TEST_CASE("left/right symmetry") {
    SyntheticModelConfig a = config_for(star1());
    a.scales.left_roll = 0.0011;
    a.scales.right_roll = 0.0019;
    a.scales.left_pitch = 0.0013;
    a.scales.right_pitch = 0.0009;
    SyntheticModelConfig b = a;
    std::swap(b.scales.left_roll, b.scales.right_roll);
    std::swap(b.scales.left_pitch, b.scales.right_pitch);
    const auto s = star1().to_vector();
    b.phi_star = DesignVector::from_vector({s[2], s[3], s[0], s[1], s[4]});
    const FeasibleRegion region{20, 20, 20, 20, 3.5, std::nullopt};
    const SyntheticEvaluator ea(region, a), eb(region, b);
    const DesignVector phi = DesignVector::from_vector({3, -7, 11, 2, -1});
    const DesignVector swapped = DesignVector::from_vector({11, 2, 3, -7, -1});
    const auto ra = ea.evaluate(phi);
    const auto rb = eb.evaluate(swapped);
    CHECK(ra.apposition_left == rb.apposition_right);
    CHECK(ra.apposition_right == rb.apposition_left);
    CHECK(ra.sf_left == rb.sf_right);

    // negating the planted optimum and the design gives the same response
    SyntheticModelConfig n = a;
    n.phi_star = DesignVector::from_vector({-s[0], -s[1], -s[2], -s[3], -s[4]});
    const SyntheticEvaluator en(region, n);
    const auto rn = en.evaluate(DesignVector::from_vector({-3, 7, -11, -2, 1}));
    CHECK(rn == ra);
  }

  TEST_CASE("safety factor falls towards the optimum") {
    const SyntheticEvaluator ev(generic1(), config_for(star1()));
    const auto star = star1().to_vector();
    const auto w = generic1().half_widths();
    for (std::size_t c = 0; c < 5; ++c) {
      std::vector<double> prev_l, prev_r;
      for (int i = 0; i <= 20; ++i) {
        auto v = star;
        v[c] = -w[c] + (star[c] + w[c]) * i / 20.0;  // walk from the lower bound to the optimum
        const auto r = ev.evaluate(DesignVector::from_vector(v));
        if (!prev_l.empty())
          for (std::size_t k = 0; k < r.steps; ++k) {
            CHECK(r.sf_left[k] <= prev_l[k]);
            CHECK(r.sf_right[k] <= prev_r[k]);
          }
        prev_l = r.sf_left;
        prev_r = r.sf_right;
      }
    }
  }

  TEST_CASE("planted optimum wins the grid") {
    const FeasibleRegion region = generic1();
    const SyntheticEvaluator ev(region, config_for(star1()));
    const ObjectiveWeights wts;
    const double best = score(ev.evaluate(star1()), ObjectiveKind::FOpt, wts);
    const auto w = region.half_widths();
    double grid_best = -1e9;
    std::vector<double> v(5);
    for (int idx = 0; idx < 3125; ++idx) {
      int rest = idx;
      for (std::size_t c = 0; c < 5; ++c) {
        v[c] = -w[c] + w[c] * 0.5 * (rest % 5);
        rest /= 5;
      }
      grid_best = std::max(grid_best, score(ev.evaluate(DesignVector::from_vector(v)), ObjectiveKind::FOpt, wts));
    }
    CHECK(grid_best == best);
    CHECK(best > score(ev.evaluate(DesignVector::baseline(1)), ObjectiveKind::FOpt, wts));
  }

  TEST_CASE("contact modulus scales the energy quadratically") {
    SyntheticModelConfig c = config_for(star1());
    const SyntheticEvaluator base(generic1(), c);
    apply_parameter(c, "contact_E", 1.1);
    const SyntheticEvaluator up(generic1(), c);
    const auto s0 = base.sample_at_depth(0.1, BoneRegion::Cancellous);
    const auto s1 = up.sample_at_depth(0.1, BoneRegion::Cancellous);
    CHECK(s1.stimulus / s0.stimulus == doctest::Approx(1.21).epsilon(1e-12));
  }

  TEST_CASE("config validation") {
    SyntheticModelConfig c = config_for(star1());
    c.peak_gap_mm = 0.25;
    CHECK_THROWS_AS(SyntheticEvaluator(generic1(), c), Error);
    c = config_for(DesignVector::from_vector({30, 0, 0, 0, 0}));
    CHECK_THROWS_AS(SyntheticEvaluator(generic1(), c), Error);
    c = config_for(star1());
    CHECK_THROWS_AS(SyntheticEvaluator(rb_region(), c), Error);
  }

  TEST_CASE("result json and external evaluator") {
    EvaluationResult r;
    r.steps = 2;
    r.apposition_left = {0.25, 0.5};
    r.apposition_right = {0.0, 1.0};
    r.sf_left = {std::numeric_limits<double>::infinity(), 0.75};
    r.sf_right = {2.0, 1.0 / 3.0};
    const auto text = evaluation_result_to_json(r);
    CHECK(evaluation_result_from_json(text) == r);
    CHECK(evaluation_request_json(DesignVector::from_vector({1, 2, 3, 4, 5})).find("theta_Lr") != std::string::npos);

    const std::string cmd = "cat >/dev/null; printf '%s' '" + text + "'";
    const ExternalEvaluator ext(generic1(), cmd);
    CHECK(ext.evaluate(DesignVector::baseline(1)) == r);
    CHECK_THROWS_AS(ExternalEvaluator(generic1(), "exit 3").evaluate(DesignVector::baseline(1)), Error);
    CHECK_THROWS_AS(ExternalEvaluator(generic1(), "echo not-json").evaluate(DesignVector::baseline(1)), Error);
    CHECK_THROWS_AS(ext.evaluate(DesignVector::from_vector({30, 0, 0, 0, 0})), Error);
  }
}
