#include <algorithm>
#include <map>
#include <string>

#include "doctest.h"
#include "xaib/formula.hpp"
#include "xaib/rng.hpp"

using namespace xaib;

namespace {

// Evaluates the concrete syntax directly from the text, without the parser.
// Atoms are looked up by their printed form.
class TextEvaluator {
public:
    TextEvaluator(std::string text, const std::map<std::string, bool>& values) : s_(std::move(text)), v_(values) {}
    bool run() {
        const bool r = expr();
        REQUIRE(i_ == s_.size());
        return r;
    }

private:
    void skip() {
        while (i_ < s_.size() && s_[i_] == ' ') ++i_;
    }
    bool expr() {
        skip();
        if (s_.compare(i_, 2, "!!") == 0) {
            i_ += 2;
            return expr();
        }
        if (s_[i_] == '!') {
            ++i_;
            return !expr();
        }
        if (s_[i_] == '(') {
            ++i_;
            const bool lhs = expr();
            skip();
            if (s_[i_] == ')') {
                ++i_;
                return lhs;
            }
            const char op = s_[i_++];
            const bool rhs = expr();
            skip();
            REQUIRE(s_[i_] == ')');
            ++i_;
            return op == '&' ? (lhs && rhs) : (lhs || rhs);
        }
        if (s_[i_] == 'T') {
            ++i_;
            return true;
        }
        const std::size_t close = s_.find(')', i_);
        const std::string atom = s_.substr(i_, close + 1 - i_);
        i_ = close + 1;
        return v_.at(atom);
    }

    std::string s_;
    const std::map<std::string, bool>& v_;
    std::size_t i_ = 0;
};

Atom random_atom(Rng& rng, bool concept_level) {
    if (rng.below(4) == 0) return Atom::top();
    if (concept_level) return Atom::concept_at(static_cast<int>(rng.below(5)), static_cast<int>(rng.below(9)));
    return Atom::concept_part(static_cast<int>(rng.below(12)), static_cast<int>(rng.below(4)),
                              static_cast<int>(rng.below(3)));
}

Formula random_formula(Rng& rng) {
    const bool concept_level = rng.bernoulli(0.5);
    Formula f;
    auto term = [&] {
        return PairTerm{random_atom(rng, concept_level), rng.bernoulli(0.5) ? Binary::And : Binary::Or,
                        random_atom(rng, concept_level)};
    };
    f.a = term();
    f.b = term();
    f.c = rng.bernoulli(0.5) ? Unary::Not : Unary::NotNot;
    f.d = rng.bernoulli(0.5) ? Unary::Not : Unary::NotNot;
    f.e = rng.bernoulli(0.5) ? Binary::And : Binary::Or;
    return f;
}

// Every assignment of the formula's atoms, checked against the text evaluator.
void check_truth_table(const Formula& f, const std::string& text) {
    const auto vars = atoms(f);
    REQUIRE(vars.size() < 20);
    for (std::uint32_t mask = 0; mask < (1u << vars.size()); ++mask) {
        Assignment a;
        std::map<std::string, bool> by_text;
        for (std::size_t k = 0; k < vars.size(); ++k) {
            const bool on = (mask >> k) & 1u;
            a[vars[k]] = on;
            by_text[print(vars[k])] = on;
        }
        TextEvaluator ev(text, by_text);
        CHECK(evaluate(f, a) == ev.run());
    }
}

std::string without_double_negation(std::string s) {
    for (std::size_t p; (p = s.find("!!")) != std::string::npos;) s.erase(p, 2);
    return s;
}

}  // namespace

TEST_CASE("concept 0 parses into its AST") {
    const Formula f = parse_formula("((!!(cp(7,0,0) & cp(10,1,0))) | (!!(cp(4,2,0) & cp(1,3,0))))");
    CHECK(f.a.lhs == Atom::concept_part(7, 0, 0));
    CHECK(f.a.op == Binary::And);
    CHECK(f.a.rhs == Atom::concept_part(10, 1, 0));
    CHECK(f.c == Unary::NotNot);
    CHECK(f.b.lhs == Atom::concept_part(4, 2, 0));
    CHECK(f.b.rhs == Atom::concept_part(1, 3, 0));
    CHECK(f.d == Unary::NotNot);
    CHECK(f.e == Binary::Or);
    CHECK(f == builtin_definitions().concepts[0]);
}

TEST_CASE("the all-Top formula is always true") {
    const Formula f = parse_formula("((!!(T & T)) & (!!(T & T)))");
    CHECK(atoms(f).empty());
    CHECK(evaluate(f, {}));
}

TEST_CASE("print then parse is a fixed point on random formulas") {
    Rng rng(99);
    for (int i = 0; i < 200; ++i) {
        const Formula f = random_formula(rng);
        const std::string text = print(f);
        const Formula g = parse_formula(text);
        CHECK(g == f);
        CHECK(print(g) == text);
    }
}

TEST_CASE("whitespace is accepted") {
    const Formula f = parse_formula("  ( ( !! ( cp(7, 0, 0) &cp(10,1,0) ) ) | ( !!(cp(4,2,0)&cp(1,3,0)) ) )  ");
    CHECK(f == builtin_definitions().concepts[0]);
}

TEST_CASE("class 3 is exclusive or") {
    const Formula f = instantiate(parse_formula("((!!(c(id,1) | c(id,2))) & (!(c(id,1) & c(id,2))))"), 2);
    const Atom c1 = Atom::concept_at(2, 1), c2 = Atom::concept_at(2, 2);
    CHECK(evaluate(f, {{c1, true}, {c2, false}}));
    CHECK(evaluate(f, {{c1, false}, {c2, true}}));
    CHECK_FALSE(evaluate(f, {{c1, true}, {c2, true}}));
    CHECK_FALSE(evaluate(f, {{c1, false}, {c2, false}}));
}

TEST_CASE("missing assignment is rejected") {
    const Formula f = builtin_definitions().concepts[1];
    CHECK_THROWS_AS(evaluate(f, {{Atom::concept_part(6, 0, 0), true}}), std::invalid_argument);
}

TEST_CASE("builtin truth tables match the text evaluator") {
    const Definitions& d = builtin_definitions();
    for (const auto& f : d.concepts) check_truth_table(f, print(f));
    for (int id = 0; id < 5; ++id) {
        for (const auto& f : d.classes_for(id)) check_truth_table(f, print(f));
    }
}

TEST_CASE("removing double negations does not change the value") {
    Rng rng(4);
    for (int i = 0; i < 50; ++i) {
        const Formula f = random_formula(rng);
        check_truth_table(f, without_double_negation(print(f)));
    }
}

TEST_CASE("builtin definitions") {
    const Definitions& d = builtin_definitions();
    CHECK(print(d.concepts[3]) == "((!!(cp(8,0,1) & cp(11,1,1))) & (!!(T & T)))");
    const auto classes = d.classes_for(2);
    const auto a0 = atoms(classes[0]);
    CHECK(std::find(a0.begin(), a0.end(), Atom::concept_at(2, 0)) != a0.end());
    for (int id = 0; id < 5; ++id) {
        const Formula f = d.classes_for(id)[4];
        Assignment none;
        for (const auto& a : atoms(f)) none[a] = false;
        CHECK(evaluate(f, none));
    }
}

TEST_CASE("syntax errors report line and column") {
    const std::string text = "((!!(cp(7,0,0) & cp(10,1,0))) | (!!(cp(4,2,0) & )))";
    try {
        parse_formula(text, 3, 1);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(e.column() == static_cast<int>(text.find("& )") + 3));
    }
    CHECK_THROWS_AS(parse_formula("((!!(T & T)) & (!!(T & T))) extra"), ParseError);
    CHECK_THROWS_AS(parse_formula("(!!(T & T))"), ParseError);
    CHECK_THROWS_AS(parse_formula("((!!(T ^ T)) & (!!(T & T)))"), ParseError);
    CHECK_THROWS_AS(parse_formula("((!!(T & T & T)) & (!!(T & T)))"), ParseError);
}

TEST_CASE("out-of-range atom indices are rejected") {
    CHECK_THROWS_AS(parse_formula("((!!(cp(12,0,0) & T)) & (!!(T & T)))"), ParseError);
    CHECK_THROWS_AS(parse_formula("((!!(cp(1,4,0) & T)) & (!!(T & T)))"), ParseError);
    CHECK_THROWS_AS(parse_formula("((!!(cp(1,0,3) & T)) & (!!(T & T)))"), ParseError);
    CHECK_THROWS_AS(parse_formula("((!!(c(5,0) & T)) & (!!(T & T)))"), ParseError);
    CHECK_THROWS_AS(parse_formula("((!!(c(1,9) & T)) & (!!(T & T)))"), ParseError);
    CHECK_THROWS_AS(Atom::concept_part(-1, 0, 0), std::out_of_range);
}

TEST_CASE("definition files round trip and report bad lines") {
    const Definitions& d = builtin_definitions();
    const std::string text = print_definitions(d);
    const Definitions back = parse_definitions(text);
    CHECK(back.concepts == d.concepts);
    CHECK(back.classes == d.classes);

    const std::string with_comments = "# shipped defaults\n\n" + text;
    CHECK(parse_definitions(with_comments).concepts == d.concepts);

    std::string dup = text + "concept 0: ((!!(T & T)) & (!!(T & T)))\n";
    CHECK_THROWS_AS(parse_definitions(dup), ParseError);

    const std::string missing = text.substr(0, text.rfind("class 4"));
    CHECK_THROWS_AS(parse_definitions(missing), ParseError);

    try {
        parse_definitions("concept 0: ((!!(T & T)) & (!!(T & T)))\nconcept 1: ((!!(T & T)) & (!!(T &)))\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
}
