#pragma once

#include <string>
#include <vector>

#include "srmap/matrix.hpp"

namespace srmap {

enum class Palette { Gray, Diverging };

/// Renders a 2D field to an image document: binary PGM for Gray (min-max
/// normalized, constant fields map to 128) or an SVG grid of rects for
/// Diverging (white at zero, symmetric in |value|). Masked and NaN cells are
/// walls: black in PGM, with data then confined to [16, 255]; dark grey in SVG.
std::string render_heatmap(const Matrix& field, Palette palette, const std::vector<bool>& wall_mask = {});

}  // namespace srmap
