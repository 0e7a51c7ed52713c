#include "bedrec/raster.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bedrec/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace bedrec {

namespace {

constexpr char kNpyMagic[6] = {'\x93', 'N', 'U', 'M', 'P', 'Y'};

std::string sidecar_path(const std::string& path) { return path + ".json"; }

std::string format_double(double v) {
    char buf[32];
    snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double_field(std::string_view field, const std::string& path, std::size_t line) {
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
        field.remove_suffix(1);
    double value = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw FormatError(path + ":" + std::to_string(line) + ": bad numeric field '" +
                          std::string(field) + "'");
    }
    if (!std::isfinite(value)) {
        throw FormatError(path + ":" + std::to_string(line) + ": non-finite value");
    }
    return value;
}

json read_json_file(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw IoError(std::string("cannot open ") + what + ": " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw FormatError(std::string("invalid JSON in ") + what + ": " + path);
    return j;
}

}  // namespace

RasterGrid::RasterGrid(int h, int w, double fill)
    : height(h),
      width(w),
      values(static_cast<std::size_t>(h) * w, fill),
      valid_mask(static_cast<std::size_t>(h) * w, 1) {}

void RasterGrid::set_geometry(const GridGeometry& g) {
    height = g.height;
    width = g.width;
    cell_size = g.cell_size;
    origin_x = g.origin_x;
    origin_y = g.origin_y;
}

// ---------------------------------------------------------------------------
// NPY
// ---------------------------------------------------------------------------

void write_npy(const std::string& path, const std::vector<std::size_t>& shape,
               const std::vector<double>& data) {
    std::size_t count = 1;
    for (std::size_t s : shape) count *= s;
    if (count != data.size()) throw ShapeError("write_npy: shape does not match payload size");

    std::string shape_str = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        shape_str += std::to_string(shape[i]);
        shape_str += (shape.size() == 1) ? "," : (i + 1 < shape.size() ? ", " : "");
    }
    shape_str += ")";
    std::string dict =
        "{'descr': '<f8', 'fortran_order': False, 'shape': " + shape_str + ", }";
    // magic(6) + version(2) + header_len(2) + dict + padding + '\n', 64-aligned
    std::size_t unpadded = 10 + dict.size() + 1;
    std::size_t padded = (unpadded + 63) / 64 * 64;
    dict.append(padded - unpadded, ' ');
    dict.push_back('\n');

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kNpyMagic, 6);
    const unsigned char version[2] = {1, 0};
    out.write(reinterpret_cast<const char*>(version), 2);
    const std::uint16_t hlen = static_cast<std::uint16_t>(dict.size());
    unsigned char hlen_le[2] = {static_cast<unsigned char>(hlen & 0xFF),
                                static_cast<unsigned char>(hlen >> 8)};
    out.write(reinterpret_cast<const char*>(hlen_le), 2);
    out.write(dict.data(), static_cast<std::streamsize>(dict.size()));
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!out) throw IoError("write failed: " + path);
}

NpyArray read_npy(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);

    char magic[6];
    in.read(magic, 6);
    if (in.gcount() != 6 || std::memcmp(magic, kNpyMagic, 6) != 0) {
        throw FormatError("not an NPY file (bad magic): " + path);
    }
    unsigned char version[2];
    in.read(reinterpret_cast<char*>(version), 2);
    if (!in || version[0] != 1) {
        throw FormatError("unsupported NPY version in " + path);
    }
    unsigned char hlen_le[2];
    in.read(reinterpret_cast<char*>(hlen_le), 2);
    if (!in) throw FormatError("truncated NPY header: " + path);
    const std::size_t hlen = hlen_le[0] | (static_cast<std::size_t>(hlen_le[1]) << 8);
    std::string dict(hlen, '\0');
    in.read(dict.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw FormatError("truncated NPY header: " + path);

    if (dict.find("'<f8'") == std::string::npos) {
        throw FormatError("NPY dtype must be '<f8': " + path);
    }
    if (dict.find("'fortran_order': False") == std::string::npos) {
        throw FormatError("NPY must be C-contiguous: " + path);
    }
    const auto lp = dict.find("'shape':");
    const auto open = dict.find('(', lp);
    const auto close = dict.find(')', open);
    if (lp == std::string::npos || open == std::string::npos || close == std::string::npos) {
        throw FormatError("NPY header missing shape: " + path);
    }
    NpyArray arr;
    std::size_t pos = open + 1;
    while (pos < close) {
        while (pos < close && (dict[pos] == ' ' || dict[pos] == ',')) ++pos;
        if (pos >= close) break;
        std::size_t dim = 0;
        const auto res = std::from_chars(dict.data() + pos, dict.data() + close, dim);
        if (res.ec != std::errc()) throw FormatError("bad shape in NPY header: " + path);
        arr.shape.push_back(dim);
        pos = static_cast<std::size_t>(res.ptr - dict.data());
    }

    std::size_t count = 1;
    for (std::size_t s : arr.shape) count *= s;
    arr.data.resize(count);
    in.read(reinterpret_cast<char*>(arr.data.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double)) {
        throw CorruptError("NPY payload shorter than header shape: " + path);
    }
    char extra;
    in.read(&extra, 1);
    if (in.gcount() != 0) {
        throw CorruptError("NPY payload longer than header shape: " + path);
    }
    return arr;
}

void write_raster(const RasterGrid& grid, const std::string& path) {
    if (grid.height < 1 || grid.width < 1 ||
        grid.values.size() != grid.cell_count() ||
        grid.valid_mask.size() != grid.cell_count()) {
        throw ShapeError("write_raster: inconsistent grid");
    }
    std::vector<double> payload(grid.values);
    for (std::size_t i = 0; i < payload.size(); ++i) {
        if (!grid.valid_mask[i]) payload[i] = std::numeric_limits<double>::quiet_NaN();
    }
    write_npy(path, {static_cast<std::size_t>(grid.height),
                     static_cast<std::size_t>(grid.width)},
              payload);

    json side = {{"cell_size", grid.cell_size},
                 {"origin_x", grid.origin_x},
                 {"origin_y", grid.origin_y}};
    std::ofstream out(sidecar_path(path), std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + sidecar_path(path));
    out << side.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + sidecar_path(path));
}

RasterGrid read_raster(const std::string& path) {
    NpyArray arr = read_npy(path);
    if (arr.shape.size() != 2 || arr.shape[0] < 1 || arr.shape[1] < 1) {
        throw CorruptError("raster must be 2-D with positive dims: " + path);
    }
    RasterGrid grid;
    grid.height = static_cast<int>(arr.shape[0]);
    grid.width = static_cast<int>(arr.shape[1]);
    grid.values = std::move(arr.data);
    grid.valid_mask.resize(grid.values.size());
    for (std::size_t i = 0; i < grid.values.size(); ++i) {
        grid.valid_mask[i] = std::isfinite(grid.values[i]) ? 1 : 0;
    }

    const std::string side = sidecar_path(path);
    if (fs::exists(side)) {
        json j = read_json_file(side, "raster sidecar");
        if (!j.contains("cell_size") || !j.contains("origin_x") || !j.contains("origin_y")) {
            throw FormatError("raster sidecar missing geometry keys: " + side);
        }
        grid.cell_size = j["cell_size"].get<double>();
        grid.origin_x = j["origin_x"].get<double>();
        grid.origin_y = j["origin_y"].get<double>();
        if (grid.cell_size <= 0.0) throw FormatError("cell_size must be positive: " + side);
    }
    return grid;
}

// ---------------------------------------------------------------------------
// Radar CSV
// ---------------------------------------------------------------------------

RadarPickSet read_radar_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty radar CSV: " + path);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line != "x,y,bed_elev") {
        throw FormatError("radar CSV header must be 'x,y,bed_elev': " + path);
    }

    RadarPickSet out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::string_view sv(line);
        const auto c1 = sv.find(',');
        const auto c2 = (c1 == std::string_view::npos) ? c1 : sv.find(',', c1 + 1);
        if (c1 == std::string_view::npos || c2 == std::string_view::npos ||
            sv.find(',', c2 + 1) != std::string_view::npos) {
            throw FormatError(path + ":" + std::to_string(line_no) + ": expected 3 fields");
        }
        RadarPick p;
        p.x = parse_double_field(sv.substr(0, c1), path, line_no);
        p.y = parse_double_field(sv.substr(c1 + 1, c2 - c1 - 1), path, line_no);
        p.bed_elev = parse_double_field(sv.substr(c2 + 1), path, line_no);
        out.picks.push_back(p);
    }
    return out;
}

void write_radar_csv(const RadarPickSet& picks, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "x,y,bed_elev\n";
    for (const RadarPick& p : picks.picks) {
        out << format_double(p.x) << ',' << format_double(p.y) << ','
            << format_double(p.bed_elev) << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

RasterizedPicks rasterize_picks(const RadarPickSet& picks, const GridGeometry& geom) {
    RasterizedPicks out;
    out.values = RasterGrid(geom.height, geom.width, 0.0);
    out.values.set_geometry(geom);
    out.mask.assign(out.values.cell_count(), 0);
    std::fill(out.values.valid_mask.begin(), out.values.valid_mask.end(), 0);

    std::vector<double> sums(out.values.cell_count(), 0.0);
    std::vector<std::size_t> counts(out.values.cell_count(), 0);
    for (const RadarPick& p : picks.picks) {
        const int col = static_cast<int>(std::floor((p.x - geom.origin_x) / geom.cell_size + 0.5));
        const int row = static_cast<int>(std::floor((p.y - geom.origin_y) / geom.cell_size + 0.5));
        if (row < 0 || row >= geom.height || col < 0 || col >= geom.width) {
            ++out.dropped;
            continue;
        }
        const std::size_t i = out.values.index(row, col);
        sums[i] += p.bed_elev;
        ++counts[i];
        out.kept.picks.push_back(p);
    }
    for (std::size_t i = 0; i < sums.size(); ++i) {
        if (counts[i] > 0) {
            out.values.values[i] = sums[i] / static_cast<double>(counts[i]);
            out.values.valid_mask[i] = 1;
            out.mask[i] = 1;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Region manifest
// ---------------------------------------------------------------------------

RegionDataset load_region(const std::string& manifest_path) {
    const json manifest = read_json_file(manifest_path, "region manifest");
    static constexpr std::array<const char*, 10> kRequired = {
        "smb", "elv", "vx", "vy", "dhdt", "ref_bed", "radar_csv",
        "cell_size", "origin_x", "origin_y"};
    for (const char* key : kRequired) {
        if (!manifest.contains(key)) {
            throw SchemaError(std::string("region manifest missing key '") + key +
                              "': " + manifest_path);
        }
    }

    const fs::path base = fs::path(manifest_path).parent_path();
    auto resolve = [&](const std::string& rel) {
        fs::path p(rel);
        return (p.is_absolute() ? p : base / p).string();
    };

    RegionDataset region;
    auto load_one = [&](const char* key) {
        RasterGrid g = read_raster(resolve(manifest[key].get<std::string>()));
        return g;
    };
    for (std::size_t i = 0; i < RegionDataset::kFeatureNames.size(); ++i) {
        region.features[i] = load_one(RegionDataset::kFeatureNames[i]);
    }
    region.ref_bed = load_one("ref_bed");

    GridGeometry geom = region.ref_bed.geometry();
    geom.cell_size = manifest["cell_size"].get<double>();
    geom.origin_x = manifest["origin_x"].get<double>();
    geom.origin_y = manifest["origin_y"].get<double>();
    if (geom.cell_size <= 0.0) throw SchemaError("manifest cell_size must be positive");

    auto check_geometry = [&](const RasterGrid& g, const char* name) {
        if (g.height != geom.height || g.width != geom.width) {
            throw GeometryError(std::string("raster '") + name + "' is " +
                                std::to_string(g.height) + "x" + std::to_string(g.width) +
                                ", expected " + std::to_string(geom.height) + "x" +
                                std::to_string(geom.width));
        }
        if (g.cell_size != geom.cell_size || g.origin_x != geom.origin_x ||
            g.origin_y != geom.origin_y) {
            throw GeometryError(std::string("raster '") + name +
                                "' geometry disagrees with manifest");
        }
    };
    // Sidecars written by this tool always carry geometry; foreign rasters
    // without a sidecar inherit the manifest's.
    auto adopt_or_check = [&](RasterGrid& g, const char* name) {
        if (g.cell_size == 1.0 && g.origin_x == 0.0 && g.origin_y == 0.0 &&
            !(geom.cell_size == 1.0 && geom.origin_x == 0.0 && geom.origin_y == 0.0)) {
            g.cell_size = geom.cell_size;
            g.origin_x = geom.origin_x;
            g.origin_y = geom.origin_y;
        }
        check_geometry(g, name);
    };
    for (std::size_t i = 0; i < region.features.size(); ++i) {
        adopt_or_check(region.features[i], RegionDataset::kFeatureNames[i]);
    }
    adopt_or_check(region.ref_bed, "ref_bed");

    const RadarPickSet picks = read_radar_csv(resolve(manifest["radar_csv"].get<std::string>()));
    RasterizedPicks raster = rasterize_picks(picks, geom);
    region.radar_values = std::move(raster.values);
    region.radar_mask = std::move(raster.mask);
    region.picks = std::move(raster.kept);
    region.dropped_pick_count = raster.dropped;
    return region;
}

}  // namespace bedrec
