#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace tracefem {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Axis-aligned bounding box.
struct Box {
    Vec3 lo = Vec3::Zero();
    Vec3 hi = Vec3::Zero();

    Vec3 extent() const { return hi - lo; }
    double diagonal() const { return extent().norm(); }
    bool valid() const {
        return hi.x() > lo.x() && hi.y() > lo.y() && hi.z() > lo.z();
    }
};

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct RootNotFound : Error {
    explicit RootNotFound(const std::string& what) : Error(what) {}
};

struct InvalidTopology : Error {
    std::vector<int> elements;
    InvalidTopology(const std::string& what, std::vector<int> elems)
        : Error(what), elements(std::move(elems)) {}
};

}  // namespace tracefem
