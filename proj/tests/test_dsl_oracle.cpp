// Differential test: random programs are evaluated by the production evaluator
// and by the naive reference in dsl_reference.hpp.

#include <cmath>
#include <set>

#include "doctest.h"
#include "dsl_reference.hpp"
#include "support.hpp"

#include "alphalogics/error.hpp"

using namespace alphalogics;
using namespace alphalogics::dsl;
using dsl_reference::Grid;
using dsl_reference::ProgramGenerator;
using dsl_reference::Reference;
using dsl_reference::agree;

TEST_CASE("production evaluator matches the naive reference on random programs") {
    ProgramGenerator gen(20240611);
    std::mt19937_64 panel_rng(77);
    std::size_t programs = 0, cells = 0, parse_rejects = 0;
    std::set<std::string> seen_ops;

    for (int panel_no = 0; panel_no < 4; ++panel_no) {
        const Panel p = testing_support::random_panel(panel_rng, 45, 9, panel_no == 0 ? 0.0 : 0.06);
        Reference ref(p);
        for (std::size_t k = 0; k < 2 * gen.num_forms(); ++k) {
            const std::size_t depth = k % 5;  // 0..4
            const std::string text = gen.program(depth, k);
            CAPTURE(text);
            FactorExpr e;
            try {
                e = parse(text);
            } catch (const ParseError&) {
                ++parse_rejects;  // e.g. a tree made only of literals
                continue;
            }
            ++programs;
            for (const std::string& op : list_operators(e)) seen_ops.insert(op);
            const Matrix got = evaluate(e, p);
            const Grid want = ref.eval(e.root());
            bool ok = true;
            for (std::size_t t = 0; t < p.num_dates() && ok; ++t)
                for (std::size_t i = 0; i < p.num_instruments() && ok; ++i) {
                    const double g = got(t, i), w = want[t][i];
                    if (std::isnan(g) != std::isnan(w) || (!std::isnan(g) && !agree(g, w))) {
                        ok = false;
                        FAIL_CHECK("mismatch at (" << t << ", " << i << "): got " << g
                                                   << " want " << w);
                    }
                    ++cells;
                }
        }
    }
    MESSAGE(programs << " programs, " << cells << " cells, " << parse_rejects << " rejected");
    CHECK(programs > 4 * gen.num_forms());
    for (const std::string& name : OperatorCatalogue::instance().names())
        if (name != "SEQUENCE") CHECK_MESSAGE(seen_ops.count(name) == 1, name);
    CHECK(seen_ops.count("SEQUENCE") == 1);
}
