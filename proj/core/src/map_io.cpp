#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "perddqn/world.hpp"

namespace perddqn::world {
namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

// Splits "<keyword> <a> [<b>]" on single spaces; returns the value tokens.
std::vector<std::string_view> header_values(std::string_view line, std::string_view keyword, std::size_t count,
                                            int line_no) {
  if (line.substr(0, keyword.size()) != keyword || line.size() <= keyword.size() || line[keyword.size()] != ' ') {
    throw ParseError(line_no, 1, "expected '" + std::string(keyword) + "' header");
  }
  std::vector<std::string_view> values;
  std::size_t pos = keyword.size() + 1;
  while (pos <= line.size()) {
    const auto end = std::min(line.find(' ', pos), line.size());
    if (end == pos) {
      throw ParseError(line_no, static_cast<int>(pos) + 1, "unexpected space");
    }
    values.push_back(line.substr(pos, end - pos));
    pos = end + 1;
  }
  if (values.size() != count) {
    throw ParseError(line_no, 1,
                     "'" + std::string(keyword) + "' expects " + std::to_string(count) + " value(s)");
  }
  return values;
}

template <typename T>
T parse_number(std::string_view token, int line_no, int column) {
  T value{};
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ParseError(line_no, column, "invalid number '" + std::string(token) + "'");
  }
  return value;
}

}  // namespace

bool ObstacleMap::occupied_at(double x, double y) const {
  const double fc = std::floor(x / resolution);
  const double fj = std::floor(y / resolution);
  if (fc < 0 || fj < 0 || fc >= width || fj >= height) return true;
  const int col = static_cast<int>(fc);
  const int row = height - 1 - static_cast<int>(fj);
  return occupied(col, row);
}

std::size_t ObstacleMap::free_count() const {
  std::size_t n = 0;
  for (auto c : cells) n += c == 0 ? 1 : 0;
  return n;
}

double ObstacleMap::diagonal() const { return std::hypot(world_width(), world_height()); }

ObstacleMap load_map(std::string_view text, std::string name) {
  auto lines = split_lines(text);
  if (lines.size() < 2) {
    throw ParseError(static_cast<int>(lines.size()) + 1, 1, "missing header line");
  }

  ObstacleMap map;
  map.name = std::move(name);

  const auto res = header_values(lines[0], "resolution", 1, 1);
  map.resolution = parse_number<double>(res[0], 1, 12);
  if (!(map.resolution > 0.0) || !std::isfinite(map.resolution)) {
    throw DimensionError("resolution must be positive, got " + std::string(res[0]));
  }

  const auto size = header_values(lines[1], "size", 2, 2);
  map.width = parse_number<int>(size[0], 2, 6);
  map.height = parse_number<int>(size[1], 2, 7 + static_cast<int>(size[0].size()));
  if (map.width < 3 || map.height < 3) {
    throw DimensionError("map must be at least 3x3, got " + std::to_string(map.width) + "x" +
                         std::to_string(map.height));
  }

  const auto rows = static_cast<std::size_t>(map.height);
  if (lines.size() < 2 + rows) {
    throw ParseError(static_cast<int>(lines.size()) + 1, 1,
                     "expected " + std::to_string(map.height) + " grid rows, found " +
                         std::to_string(lines.size() - 2));
  }
  if (lines.size() > 2 + rows) {
    throw ParseError(static_cast<int>(2 + rows) + 1, 1, "unexpected content after grid");
  }

  map.cells.assign(rows * static_cast<std::size_t>(map.width), 0);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto line = lines[2 + r];
    const int line_no = static_cast<int>(r) + 3;
    for (std::size_t c = 0; c < line.size() && c < static_cast<std::size_t>(map.width); ++c) {
      const char ch = line[c];
      if (ch == '#') {
        map.cells[r * static_cast<std::size_t>(map.width) + c] = 1;
      } else if (ch != '.') {
        throw ParseError(line_no, static_cast<int>(c) + 1,
                         "invalid character '" + std::string(1, ch) + "' at cell (" + std::to_string(c) + ", " +
                             std::to_string(r) + ")");
      }
    }
    if (line.size() != static_cast<std::size_t>(map.width)) {
      throw ParseError(line_no, static_cast<int>(std::min(line.size(), static_cast<std::size_t>(map.width))) + 1,
                       "row has " + std::to_string(line.size()) + " cells, expected " + std::to_string(map.width));
    }
  }

  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      const bool border = r == 0 || c == 0 || r == map.height - 1 || c == map.width - 1;
      if (border && !map.occupied(c, r)) {
        throw BorderError("border cell (" + std::to_string(c) + ", " + std::to_string(r) + ") is free");
      }
    }
  }
  return map;
}

ObstacleMap load_map_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open map file " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_map(buf.str(), path.stem().string());
}

std::string format_map(const ObstacleMap& map) {
  std::ostringstream out;
  std::array<char, 32> res{};
  const auto written = std::to_chars(res.data(), res.data() + res.size(), map.resolution);
  out << "resolution " << std::string_view(res.data(), static_cast<std::size_t>(written.ptr - res.data())) << '\n';
  out << "size " << map.width << ' ' << map.height << '\n';
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) out << (map.occupied(c, r) ? '#' : '.');
    out << '\n';
  }
  return out.str();
}

}  // namespace perddqn::world
