#include <cstdio>
#include <fstream>

#include "tracefem/study.hpp"

namespace tracefem {

namespace {

int vtk_cell_type(SurfaceElemKind kind) {
    switch (kind) {
        case SurfaceElemKind::Tri3: return 5;    // VTK_TRIANGLE
        case SurfaceElemKind::Tri6: return 22;   // VTK_QUADRATIC_TRIANGLE
        case SurfaceElemKind::Quad8: return 23;  // VTK_QUADRATIC_QUAD
    }
    return 0;
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

void write_vtk_surface(
    const std::string& path, const MergedSurface& merged,
    const std::vector<std::pair<std::string, std::vector<double>>>& point_data) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write VTK file: " + path);

    out << "# vtk DataFile Version 3.0\n";
    out << "reconstructed zero-level surface\n";
    out << "ASCII\n";
    out << "DATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << merged.points.size() << " double\n";
    for (const Vec3& p : merged.points)
        out << num(p.x()) << ' ' << num(p.y()) << ' ' << num(p.z()) << '\n';

    std::size_t list_size = 0;
    for (const auto& c : merged.cells) list_size += c.size() + 1;
    out << "CELLS " << merged.cells.size() << ' ' << list_size << '\n';
    for (const auto& c : merged.cells) {
        out << c.size();
        for (int idx : c) out << ' ' << idx;
        out << '\n';
    }
    out << "CELL_TYPES " << merged.cells.size() << '\n';
    for (SurfaceElemKind k : merged.cell_kinds) out << vtk_cell_type(k) << '\n';

    if (!point_data.empty()) {
        out << "POINT_DATA " << merged.points.size() << '\n';
        for (const auto& [name, values] : point_data) {
            if (values.size() != merged.points.size())
                throw Error("point data array \"" + name + "\" has wrong size");
            out << "SCALARS " << name << " double 1\n";
            out << "LOOKUP_TABLE default\n";
            for (double v : values) out << num(v) << '\n';
        }
    }
}

}  // namespace tracefem
