#include "xaib/formula.hpp"

#include <cctype>
#include <sstream>

namespace xaib {

Atom Atom::concept_part(int id, int pos, int ch) {
    if (id < 0 || id > 11 || pos < 0 || pos > 3 || ch < 0 || ch > 2) {
        throw std::out_of_range("concept part index out of range: cp(" + std::to_string(id) + "," +
                                std::to_string(pos) + "," + std::to_string(ch) + ")");
    }
    return {Kind::ConceptPart, id, pos, ch};
}

Atom Atom::concept_at(int id, int pos) {
    if ((id != kIdPlaceholder && (id < 0 || id > 4)) || pos < 0 || pos > 8) {
        throw std::out_of_range("concept index out of range: c(" + std::to_string(id) + "," + std::to_string(pos) +
                                ")");
    }
    return {Kind::Concept, id, pos, 0};
}

ParseError::ParseError(const std::string& msg, int line, int column)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
      line_(line),
      column_(column) {}

namespace {

class Parser {
public:
    Parser(std::string_view s, int line, int column) : s_(s), line_(line), col_(column) {}

    Formula formula() {
        Formula f;
        expect('(');
        half(f.c, f.a);
        f.e = binary();
        half(f.d, f.b);
        expect(')');
        skip_ws();
        if (i_ != s_.size()) fail("unexpected trailing input");
        return f;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col_); }

    void advance() {
        if (s_[i_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++i_;
    }

    void skip_ws() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) advance();
    }

    char peek() {
        skip_ws();
        return i_ < s_.size() ? s_[i_] : '\0';
    }

    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        advance();
    }

    void half(Unary& op1, PairTerm& term) {
        expect('(');
        op1 = unary();
        expect('(');
        term.lhs = atom();
        term.op = binary();
        term.rhs = atom();
        expect(')');
        expect(')');
    }

    Unary unary() {
        expect('!');
        if (i_ < s_.size() && s_[i_] == '!') {
            advance();
            return Unary::NotNot;
        }
        return Unary::Not;
    }

    Binary binary() {
        const char c = peek();
        if (c == '&') {
            advance();
            return Binary::And;
        }
        if (c == '|') {
            advance();
            return Binary::Or;
        }
        fail("expected '&' or '|'");
    }

    int number(bool allow_id) {
        skip_ws();
        if (allow_id && s_.substr(i_, 2) == "id") {
            advance();
            advance();
            return Atom::kIdPlaceholder;
        }
        if (i_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[i_]))) fail("expected a number");
        int v = 0;
        while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) {
            v = v * 10 + (s_[i_] - '0');
            if (v > 1000) fail("number too large");
            advance();
        }
        return v;
    }

    Atom atom() {
        const char c = peek();
        const int line = line_, col = col_;
        if (c == 'T') {
            advance();
            return Atom::top();
        }
        if (s_.substr(i_, 3) == "cp(") {
            for (int k = 0; k < 3; ++k) advance();
            const int id = number(false);
            expect(',');
            const int pos = number(false);
            expect(',');
            const int ch = number(false);
            expect(')');
            try {
                return Atom::concept_part(id, pos, ch);
            } catch (const std::out_of_range& e) {
                throw ParseError(e.what(), line, col);
            }
        }
        if (s_.substr(i_, 2) == "c(") {
            advance();
            advance();
            const int id = number(true);
            expect(',');
            const int pos = number(false);
            expect(')');
            try {
                return Atom::concept_at(id, pos);
            } catch (const std::out_of_range& e) {
                throw ParseError(e.what(), line, col);
            }
        }
        fail("expected an atom (cp(..), c(..) or T)");
    }

    std::string_view s_;
    std::size_t i_ = 0;
    int line_;
    int col_;
};

std::string print(Unary u) { return u == Unary::NotNot ? "!!" : "!"; }
std::string print(Binary b) { return b == Binary::And ? "&" : "|"; }

std::string print_half(Unary u, const PairTerm& t) {
    return "(" + print(u) + "(" + print(t.lhs) + " " + print(t.op) + " " + print(t.rhs) + "))";
}

bool lookup(const Atom& a, const Assignment& asg) {
    if (a.is_top()) return true;
    auto it = asg.find(a);
    if (it == asg.end()) throw std::invalid_argument("no assignment for atom " + print(a));
    return it->second;
}

Atom instantiate(const Atom& a, int id) {
    if (a.kind == Atom::Kind::Concept && a.id == Atom::kIdPlaceholder) return Atom::concept_at(id, a.pos);
    return a;
}

}  // namespace

Formula parse_formula(std::string_view text, int line, int column) { return Parser(text, line, column).formula(); }

std::string print(const Atom& a) {
    switch (a.kind) {
        case Atom::Kind::Top: return "T";
        case Atom::Kind::ConceptPart:
            return "cp(" + std::to_string(a.id) + "," + std::to_string(a.pos) + "," + std::to_string(a.ch) + ")";
        case Atom::Kind::Concept:
            return "c(" + (a.id == Atom::kIdPlaceholder ? std::string("id") : std::to_string(a.id)) + "," +
                   std::to_string(a.pos) + ")";
    }
    return "?";
}

std::string print(const Formula& f) {
    return "(" + print_half(f.c, f.a) + " " + print(f.e) + " " + print_half(f.d, f.b) + ")";
}

bool evaluate(const PairTerm& t, const Assignment& asg) {
    const bool l = lookup(t.lhs, asg);
    const bool r = lookup(t.rhs, asg);
    return t.op == Binary::And ? (l && r) : (l || r);
}

bool evaluate(const Formula& f, const Assignment& asg) {
    const bool a = evaluate(f.a, asg);
    const bool b = evaluate(f.b, asg);
    const bool c = f.c == Unary::Not ? !a : a;
    const bool d = f.d == Unary::Not ? !b : b;
    return f.e == Binary::And ? (c && d) : (c || d);
}

std::vector<Atom> atoms(const Formula& f) {
    std::vector<Atom> out;
    for (const Atom& a : {f.a.lhs, f.a.rhs, f.b.lhs, f.b.rhs}) {
        if (a.is_top()) continue;
        bool seen = false;
        for (const Atom& o : out) seen = seen || o == a;
        if (!seen) out.push_back(a);
    }
    return out;
}

Formula instantiate(const Formula& f, int concept_id) {
    Formula g = f;
    for (PairTerm* t : {&g.a, &g.b}) {
        t->lhs = instantiate(t->lhs, concept_id);
        t->rhs = instantiate(t->rhs, concept_id);
    }
    return g;
}

std::array<Formula, 5> Definitions::classes_for(int concept_id) const {
    std::array<Formula, 5> out;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = instantiate(classes[k], concept_id);
    return out;
}

const char* const kBuiltinDefinitions = R"(# Concepts over concept parts cp(id, pos, ch).
concept 0: ((!!(cp(7,0,0) & cp(10,1,0))) | (!!(cp(4,2,0) & cp(1,3,0))))
concept 1: ((!!(cp(6,0,0) & cp(9,1,0))) & (!!(cp(3,2,0) & cp(0,3,0))))
concept 2: ((!!(cp(7,0,1) | cp(10,1,1))) & (!!(cp(4,2,2) & cp(1,3,2))))
concept 3: ((!!(cp(8,0,1) & cp(11,1,1))) & (!!(T & T)))
concept 4: ((!!(cp(8,0,1) | cp(11,1,1))) & (!(cp(8,0,1) & cp(11,1,1))))
# Classes over concepts c(id, pos) on the 3x3 grid.
class 0: ((!!(c(id,0) & T)) & (!!(T & T)))
class 1: ((!!(c(id,3) & T)) & (!!(T & T)))
class 2: ((!!(c(id,1) & c(id,2))) & (!!(T & T)))
class 3: ((!!(c(id,1) | c(id,2))) & (!(c(id,1) & c(id,2))))
class 4: ((!(c(id,0) | c(id,1))) & (!(c(id,2) | c(id,3))))
)";

const Definitions& builtin_definitions() {
    static const Definitions defs = parse_definitions(kBuiltinDefinitions);
    return defs;
}

Definitions parse_definitions(std::string_view text) {
    Definitions defs;
    std::array<bool, 5> have_concept{}, have_class{};
    int line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        ++line_no;
        start = end + 1;

        std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string_view::npos) {
            if (end == text.size()) break;
            continue;
        }
        std::size_t colon = line.find(':');
        if (colon == std::string_view::npos) throw ParseError("expected '<kind> <n>:' prefix", line_no, 1);
        std::istringstream head(std::string(line.substr(0, colon)));
        std::string kind;
        int index = -1;
        head >> kind >> index;
        if ((kind != "concept" && kind != "class") || index < 0 || index > 4) {
            throw ParseError("bad definition header '" + std::string(line.substr(0, colon)) + "'", line_no,
                             static_cast<int>(first) + 1);
        }
        Formula f = parse_formula(line.substr(colon + 1), line_no, static_cast<int>(colon) + 2);
        auto& have = kind == "concept" ? have_concept : have_class;
        if (have[index]) throw ParseError("duplicate " + kind + " " + std::to_string(index), line_no, 1);
        have[index] = true;
        (kind == "concept" ? defs.concepts : defs.classes)[index] = f;
        if (end == text.size()) break;
    }
    for (int k = 0; k < 5; ++k) {
        if (!have_concept[k]) throw ParseError("missing concept " + std::to_string(k), line_no, 1);
        if (!have_class[k]) throw ParseError("missing class " + std::to_string(k), line_no, 1);
    }
    return defs;
}

std::string print_definitions(const Definitions& defs) {
    std::string out;
    for (int k = 0; k < 5; ++k) out += "concept " + std::to_string(k) + ": " + print(defs.concepts[k]) + "\n";
    for (int k = 0; k < 5; ++k) out += "class " + std::to_string(k) + ": " + print(defs.classes[k]) + "\n";
    return out;
}

}  // namespace xaib
