#pragma once

#include <array>
#include <compare>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace xaib {

// Two-level definition language for concepts and classes:
//
//   formula := "(" half OP2 half ")"
//   half    := "(" OP1 "(" atom OP2 atom ")" ")"
//   atom    := "cp(" id "," pos "," ch ")" | "c(" id "," pos ")" | "T"
//   OP1     := "!!" | "!"
//   OP2     := "&" | "|"
//
// Class templates may write the concept id as the literal `id`.

struct Atom {
    enum class Kind { Top, ConceptPart, Concept };
    static constexpr int kIdPlaceholder = -1;

    Kind kind = Kind::Top;
    int id = 0;
    int pos = 0;
    int ch = 0;

    static Atom top() { return {}; }
    static Atom concept_part(int id, int pos, int ch);
    static Atom concept_at(int id, int pos);

    bool is_top() const { return kind == Kind::Top; }
    friend auto operator<=>(const Atom&, const Atom&) = default;
};

enum class Unary { NotNot, Not };
enum class Binary { And, Or };

struct PairTerm {
    Atom lhs;
    Binary op = Binary::And;
    Atom rhs;

    bool is_constant() const { return lhs.is_top() && rhs.is_top(); }
    friend auto operator<=>(const PairTerm&, const PairTerm&) = default;
};

struct Formula {
    PairTerm a;
    Unary c = Unary::NotNot;
    PairTerm b;
    Unary d = Unary::NotNot;
    Binary e = Binary::And;

    friend bool operator==(const Formula&, const Formula&) = default;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, int line, int column);
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

using Assignment = std::map<Atom, bool>;

Formula parse_formula(std::string_view text, int line = 1, int column = 1);
std::string print(const Formula& f);
std::string print(const Atom& a);

// Standard Boolean semantics, T is true and !! is identity.
bool evaluate(const Formula& f, const Assignment& assignment);
bool evaluate(const PairTerm& t, const Assignment& assignment);

// Distinct non-Top atoms in order of first appearance.
std::vector<Atom> atoms(const Formula& f);

// Replaces `id` placeholders in concept atoms.
Formula instantiate(const Formula& f, int concept_id);

struct Definitions {
    std::array<Formula, 5> concepts;
    std::array<Formula, 5> classes;  // templates over the concept id

    std::array<Formula, 5> classes_for(int concept_id) const;
};

const Definitions& builtin_definitions();

// `concept <n>: <formula>` / `class <n>: <formula>` lines; `#` starts a comment.
Definitions parse_definitions(std::string_view text);
std::string print_definitions(const Definitions& defs);

}  // namespace xaib
