#pragma once

#include <string>

#include "erpmvs/synth_scenes.hpp"

namespace erpmvs::io {

// Line-oriented scene description. '#' starts a comment; blank lines are
// skipped. Lines:
//   resolution <width> <height>
//   room   <cx> <cy> <cz> <sx> <sy> <sz> <texture...>
//   box    <cx> <cy> <cz> <sx> <sy> <sz> <texture...>
//   sphere <cx> <cy> <cz> <radius> <texture...>
//   camera <r00> <r01> <r02> <tx> <r10> <r11> <r12> <ty> <r20> <r21> <r22> <tz>
// where <texture...> is one of
//   solid <r> <g> <b>
//   checker <scale> <ar> <ag> <ab> <br> <bg> <bb>
//   gradient <scale> <ar> <ag> <ab> <br> <bg> <bb>
SceneSpec read_scene(const std::string& path);
void write_scene(const std::string& path, const SceneSpec& spec);

}  // namespace erpmvs::io
