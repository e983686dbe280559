#include "stratus/data.hpp"

#include <array>

#include <fmt/format.h>

#include "stratus/error.hpp"

namespace stratus::data {

namespace {

// Balanced synthetic trials with integer-hundredth responses.
struct Fixture {
    std::string_view name;
    std::string_view csv;
};

constexpr std::array<Fixture, 6> kFixtures{{
    {"crd", R"csv(Fertilizer,Rep,Yield
Control,R1,35.69
Control,R2,36.40
Control,R3,36.62
Control,R4,33.29
Control,R5,35.15
NP50,R1,41.64
NP50,R2,41.08
NP50,R3,42.77
NP50,R4,41.05
NP50,R5,40.86
NPK50,R1,47.76
NPK50,R2,48.28
NPK50,R3,47.09
NPK50,R4,47.71
NPK50,R5,48.06
NPK100,R1,50.95
NPK100,R2,57.33
NPK100,R3,54.34
NPK100,R4,56.67
NPK100,R5,57.26
)csv"},
    {"rcbd", R"csv(Variety,Block,Yield
V1,B1,48.10
V1,B2,44.74
V1,B3,46.24
V1,B4,44.28
V2,B1,51.17
V2,B2,49.21
V2,B3,51.47
V2,B4,49.47
V3,B1,54.55
V3,B2,53.76
V3,B3,54.30
V3,B4,52.75
V4,B1,59.14
V4,B2,57.33
V4,B3,59.03
V4,B4,56.46
)csv"},
    {"factorial", R"csv(Nitrogen,Spacing,Rep,Yield
Low,Narrow,R1,27.57
Low,Narrow,R2,27.32
Low,Narrow,R3,27.61
Low,Wide,R1,31.80
Low,Wide,R2,31.44
Low,Wide,R3,31.26
Medium,Narrow,R1,35.01
Medium,Narrow,R2,34.74
Medium,Narrow,R3,35.25
Medium,Wide,R1,40.58
Medium,Wide,R2,41.61
Medium,Wide,R3,40.81
High,Narrow,R1,44.06
High,Narrow,R2,44.20
High,Narrow,R3,43.74
High,Wide,R1,47.41
High,Wide,R2,47.90
High,Wide,R3,51.69
)csv"},
    {"split_plot", R"csv(Block,Irrigation,Variety,Yield
B1,Rainfed,V1,17.92
B1,Rainfed,V2,21.03
B1,Rainfed,V3,22.34
B1,Deficit,V1,25.80
B1,Deficit,V2,30.06
B1,Deficit,V3,31.56
B1,Full,V1,33.52
B1,Full,V2,38.03
B1,Full,V3,40.47
B2,Rainfed,V1,18.95
B2,Rainfed,V2,22.65
B2,Rainfed,V3,23.59
B2,Deficit,V1,26.60
B2,Deficit,V2,31.46
B2,Deficit,V3,32.87
B2,Full,V1,34.10
B2,Full,V2,39.91
B2,Full,V3,41.58
B3,Rainfed,V1,19.20
B3,Rainfed,V2,23.88
B3,Rainfed,V3,24.39
B3,Deficit,V1,27.49
B3,Deficit,V2,32.35
B3,Deficit,V3,33.79
B3,Full,V1,34.47
B3,Full,V2,39.72
B3,Full,V3,42.27
)csv"},
    {"lmm", R"csv(Treatment,Block,Yield
T1,B1,42.52
T1,B2,40.34
T1,B3,41.13
T1,B4,42.01
T2,B1,50.20
T2,B2,45.90
T2,B3,48.89
T2,B4,49.01
T3,B1,54.87
T3,B2,53.25
T3,B3,54.99
T3,B4,54.89
)csv"},
    {"gxe", R"csv(Genotype,Environment,Rep,Yield
G1,E1,R1,40.66
G1,E1,R2,41.14
G1,E2,R1,43.29
G1,E2,R2,44.89
G1,E3,R1,39.60
G1,E3,R2,39.68
G1,E4,R1,43.07
G1,E4,R2,43.11
G2,E1,R1,45.75
G2,E1,R2,45.87
G2,E2,R1,49.30
G2,E2,R2,50.52
G2,E3,R1,44.74
G2,E3,R2,46.44
G2,E4,R1,48.51
G2,E4,R2,49.83
G3,E1,R1,52.02
G3,E1,R2,51.62
G3,E2,R1,54.52
G3,E2,R2,55.04
G3,E3,R1,49.61
G3,E3,R2,50.81
G3,E4,R1,53.87
G3,E4,R2,55.31
G4,E1,R1,56.29
G4,E1,R2,55.05
G4,E2,R1,60.82
G4,E2,R2,60.66
G4,E3,R1,55.42
G4,E3,R2,54.26
G4,E4,R1,59.38
G4,E4,R2,58.92
)csv"},
}};

}  // namespace

const std::vector<std::string>& builtin_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& f : kFixtures) v.emplace_back(f.name);
        return v;
    }();
    return names;
}

std::string_view builtin_csv(std::string_view name) {
    for (const auto& f : kFixtures) {
        if (f.name == name) return f.csv;
    }
    throw Error(ErrorCode::UnknownDataset, fmt::format("unknown dataset '{}'", name));
}

Dataset builtin_dataset(std::string_view name) { return load_table(builtin_csv(name)); }

}  // namespace stratus::data
