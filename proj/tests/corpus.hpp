// Composite residual graphs with boxes on which every denominator stays
// away from zero. Together they use every opcode.
#ifndef IMPREL_TESTS_CORPUS_HPP
#define IMPREL_TESTS_CORPUS_HPP

#include <string>
#include <vector>

#include "imprel/expr.hpp"
#include "imprel/interval.hpp"

struct CorpusEntry
{
    std::string text;
    std::vector<imprel::Interval> Z;
    std::vector<imprel::Interval> P;

    imprel::ExprGraph graph() const
    {
        return imprel::parse(text, static_cast<int>(Z.size()), static_cast<int>(P.size()));
    }
};

const std::vector<CorpusEntry>& corpus();

#endif  // IMPREL_TESTS_CORPUS_HPP
