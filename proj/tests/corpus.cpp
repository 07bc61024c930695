#include "corpus.hpp"

const std::vector<CorpusEntry>& corpus()
{
    using imprel::Interval;
    static const std::vector<CorpusEntry> entries = {
        {"z1^2 - p1", {{-1, 1}}, {{0, 1}}},
        {"z1*p1 + z2", {{-1, 2}, {0, 1}}, {{-2, 3}}},
        {"exp(z1) - 2*p1", {{0, 1}}, {{0, 2}}},
        {"(p1 + 3.610/z1^2)*(z1 - 0.0429) - 0.0820574*p2", {{10, 70}}, {{0.5, 1.1}, {250, 320}}},
        {"1e-9*(exp(38*z1) - 1) + p1*z1 - 1.6", {{0, 0.8}}, {{0.6, 1.4}}},
        {"z1/(p1 + 2)", {{-1, 3}}, {{-1, 1}}},
        {"-(z1^3) + z2*z1", {{-1.5, 1}, {-2, 2}}, {{0, 1}}},
        {"exp(-z1^2)*p1", {{-1, 2}}, {{1, 3}}},
        {"z1^-2 - p1", {{0.5, 2}}, {{0, 4}}},
        {"(z1 - p1)*(z1 + p1)", {{-1, 1}}, {{-1, 1}}},
        {"exp(z1*p1)/(1 + z1^2)", {{-1, 1}}, {{-0.5, 0.5}}},
        {"z1^4 - 3*z1^2 + p1*z2", {{-2, 2}, {-1, 1}}, {{-1, 1}}},
        {"p1/z1 - p2/z2", {{1, 3}, {0.5, 2}}, {{-1, 2}, {0, 1}}},
        {"z1*z2*z3 - p1", {{-1, 1}, {0, 2}, {-2, -1}}, {{0, 1}}},
        {"(z1 - 0.5)^3 + exp(p1 - z1)", {{0, 1}}, {{-1, 1}}},
        {"-exp(z1) + exp(-z2) - p1*p2", {{-1, 1}, {0, 1}}, {{-1, 1}, {0, 2}}},
        {"z1^5/(p1^2 + 1)", {{-1, 1}}, {{-2, 2}}},
        {"(z1 + z2)^2 - z1*z2 + p1", {{0, 2}, {-1, 1}}, {{-1, 1}}},
        {"exp(exp(z1 - 1)) - p1*z1^2", {{0, 1.5}}, {{0, 1}}},
        {"0.5*z1 - 2*z2 + p1/(z2 - 3) - 4", {{-1, 1}, {0, 2}}, {{-1, 1}}},
    };
    return entries;
}
