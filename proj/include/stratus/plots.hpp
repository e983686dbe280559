#pragma once

#include <string>
#include <vector>

#include "stratus/pipeline.hpp"

namespace stratus::plots {

struct PlotFile {
    std::string name;  // file name under plots/
    std::string svg;
};

struct PlotSet {
    std::vector<PlotFile> files;
    std::vector<std::string> skipped;  // reasons for plots not drawn
};

// Box plots with HSD letters per marginal or combination comparison set,
// interaction profiles for two-factor treatment effects, variance-component
// proportions, BLUP ranking and the GGE biplot, as applicable.
PlotSet emit_plots(const pipeline::AnalysisResult& result);

std::string xml_escape(const std::string& text);

}  // namespace stratus::plots
