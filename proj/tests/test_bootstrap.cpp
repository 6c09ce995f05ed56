#include "outperform/bootstrap.hpp"
#include "outperform/error.hpp"
#include "outperform/market_data.hpp"
#include "outperform/scenario_set.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace outperform;

namespace {

// Column 0 holds row * 1e-3, column 1 the same plus 0.5, so every output row
// identifies its source row and whether both columns came from the same date.
return_table indexed_table(std::size_t n)
{
    return_table t;
    t.assets = {"a", "b"};
    year_month ym{1970, 1};
    for (std::size_t i = 0; i < n; ++i, ym = ym.next()) {
        t.dates.push_back(ym);
        t.returns.push_back(1e-3 * static_cast<double>(i));
        t.returns.push_back(1e-3 * static_cast<double>(i) + 0.5);
    }
    return t;
}

std::size_t source_row(double a)
{
    return static_cast<std::size_t>(std::lround(a * 1e3));
}

} // namespace

TEST_SUITE("bootstrap")
{
    TEST_CASE("expected blocksize one always gives one")
    {
        auto rng = substream(1, stream_domain::bootstrap, 0);
        for (int i = 0; i < 1000; ++i) CHECK(sample_blocksize(rng, 1.0) == 1);
        CHECK_THROWS_AS(sample_blocksize(rng, 0.5), invalid_argument);
    }

    TEST_CASE("geometric blocksize moments")
    {
        auto rng = substream(2, stream_domain::bootstrap, 0);
        const int n = 100000;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            const auto k = sample_blocksize(rng, 6.0);
            REQUIRE(k >= 1);
            sum += static_cast<double>(k);
        }
        CHECK(std::abs(sum / n - 6.0) / 6.0 < 0.02);

        int ones = 0;
        for (int i = 0; i < n; ++i) ones += sample_blocksize(rng, 2.0) == 1 ? 1 : 0;
        CHECK(std::abs(static_cast<double>(ones) / n - 0.5) < 0.01);
    }

    TEST_CASE("circular block wraps to the start of its segment")
    {
        std::vector<std::size_t> rows;
        append_circular_block(rows, 9, 2, 0, 10, 100);
        CHECK(rows == std::vector<std::size_t>{9, 0});

        rows.clear();
        append_circular_block(rows, 7, 4, 5, 8, 100);
        CHECK(rows == std::vector<std::size_t>{7, 5, 6, 7});

        rows.clear();
        append_circular_block(rows, 0, 50, 0, 10, 3);
        CHECK(rows.size() == 3); // truncated at the required length
    }

    TEST_CASE("singleton source")
    {
        return_table t;
        t.assets = {"x", "y"};
        t.dates = {{1980, 1}};
        t.returns = {0.03, -0.01};
        bootstrap_options o;
        o.n_scenarios = 20;
        o.n_periods = 15;
        o.seed = 3;
        const auto set = stationary_block_bootstrap(t, o);
        for (std::size_t s = 0; s < 20; ++s)
            for (std::size_t j = 0; j < 15; ++j) {
                CHECK(set.at(s, j, 0) == 0.03);
                CHECK(set.at(s, j, 1) == -0.01);
            }
        CHECK(set.origin == provenance::bootstrap);
        CHECK_THROWS_AS(stationary_block_bootstrap(return_table{}, o), invalid_argument);
    }

    TEST_CASE("rows are sampled jointly")
    {
        const auto t = indexed_table(37);
        bootstrap_options o;
        o.n_scenarios = 200;
        o.n_periods = 120;
        o.expected_blocksize = 6.0;
        o.seed = 4;
        const auto set = stationary_block_bootstrap(t, o);
        for (std::size_t s = 0; s < set.n_scenarios; ++s)
            for (std::size_t j = 0; j < set.n_periods; ++j) REQUIRE(set.at(s, j, 1) - set.at(s, j, 0) == 0.5);
    }

    TEST_CASE("blocks advance one source row at a time")
    {
        const auto t = indexed_table(50);
        bootstrap_options o;
        o.n_scenarios = 100;
        o.n_periods = 120;
        o.expected_blocksize = 1e9; // one block per path
        o.seed = 8;
        const auto set = stationary_block_bootstrap(t, o);
        for (std::size_t s = 0; s < set.n_scenarios; ++s)
            for (std::size_t j = 1; j < set.n_periods; ++j)
                REQUIRE(source_row(set.at(s, j, 0)) == (source_row(set.at(s, j - 1, 0)) + 1) % 50);
    }

    TEST_CASE("blocksize one is i.i.d. uniform over source rows (chi-square, 1% level)")
    {
        const std::size_t n_rows = 20;
        const auto t = indexed_table(n_rows);
        bootstrap_options o;
        o.n_scenarios = 1000;
        o.n_periods = 100;
        o.expected_blocksize = 1.0;
        o.seed = 5;
        const auto set = stationary_block_bootstrap(t, o);
        std::vector<double> counts(n_rows, 0.0);
        for (double v : set.returns)
            if (v < 0.5) counts[source_row(v)] += 1.0;
        const double expected = 1e5 / static_cast<double>(n_rows);
        double chi2 = 0.0;
        for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
        CHECK(chi2 < 36.191); // chi-square(19) upper 1% point

        // Adjacent rows independent: the successor of row r is uniform too.
        std::size_t repeats = 0;
        for (std::size_t s = 0; s < set.n_scenarios; ++s)
            for (std::size_t j = 1; j < set.n_periods; ++j)
                repeats += source_row(set.at(s, j, 0)) == source_row(set.at(s, j - 1, 0)) ? 1 : 0;
        const double pairs = 1000.0 * 99.0;
        const double p = 1.0 / static_cast<double>(n_rows);
        CHECK(std::abs(static_cast<double>(repeats) - pairs * p) < 3.0 * std::sqrt(pairs * p * (1 - p)));
    }

    TEST_CASE("seeded determinism and per-scenario sub-streams")
    {
        const auto t = indexed_table(30);
        bootstrap_options o;
        o.n_scenarios = 50;
        o.n_periods = 24;
        o.seed = 6;
        const auto a = stationary_block_bootstrap(t, o);
        const auto b = stationary_block_bootstrap(t, o);
        CHECK(a.returns == b.returns);
        o.n_scenarios = 10;
        const auto c = stationary_block_bootstrap(t, o);
        for (std::size_t s = 0; s < 10; ++s) {
            const auto pa = a.path(s);
            const auto pc = c.path(s);
            CHECK(std::equal(pa.begin(), pa.end(), pc.begin()));
        }
        o.seed = 7;
        const auto d = stationary_block_bootstrap(t, o);
        CHECK(d.returns != c.returns);
    }

    TEST_CASE("per-segment blocks stay inside their segment")
    {
        auto t = indexed_table(30);
        t.dates.clear();
        year_month ym{1940, 1};
        for (int i = 0; i < 10; ++i, ym = ym.next()) t.dates.push_back(ym);
        ym = {1970, 1};
        for (int i = 0; i < 20; ++i, ym = ym.next()) t.dates.push_back(ym);
        t.segment_starts = {0, 10};
        REQUIRE_NOTHROW(t.validate());
        bootstrap_options o;
        o.n_scenarios = 100;
        o.n_periods = 60;
        o.expected_blocksize = 1e9;
        o.per_segment = true;
        o.seed = 9;
        const auto set = stationary_block_bootstrap(t, o);
        std::size_t first_segment = 0;
        for (std::size_t s = 0; s < set.n_scenarios; ++s) {
            const bool in_first = source_row(set.at(s, 0, 0)) < 10;
            first_segment += in_first ? 1 : 0;
            for (std::size_t j = 0; j < set.n_periods; ++j) REQUIRE((source_row(set.at(s, j, 0)) < 10) == in_first);
        }
        // Segment chosen with probability proportional to length (1/3 here).
        CHECK(first_segment > 15);
        CHECK(first_segment < 55);
    }

    TEST_CASE("scenario sets round trip through files bit for bit")
    {
        const auto t = indexed_table(12);
        bootstrap_options o;
        o.n_scenarios = 7;
        o.n_periods = 9;
        o.seed = 10;
        const auto set = stationary_block_bootstrap(t, o);
        const auto stem = test_util::tmp_dir("bootstrap") / "set";
        save_scenarios(set, stem);
        const auto back = load_scenarios(stem);
        CHECK(back.returns == set.returns);
        CHECK(back.n_scenarios == 7);
        CHECK(back.n_periods == 9);
        CHECK(back.assets == set.assets);
        CHECK(back.seed == 10);
        CHECK(back.origin == provenance::bootstrap);
        CHECK(back.source == set.source);
    }
}
