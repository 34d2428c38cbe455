#pragma once

#include <string>

#include "pcgen/geometry.hpp"

namespace pcgen {

enum class CloudFormat { Xyz, Binary, Ply };

CloudFormat cloud_format_from_name(const std::string& name);

// ASCII XYZ: one "x y z" line per point, 9 significant digits.
void write_cloud_xyz(const std::string& path, const PointCloud& cloud);
PointCloud read_cloud_xyz(const std::string& path);

// Binary: "PCF1" magic, uint32 little-endian count, float32 LE triples.
void write_cloud_binary(const std::string& path, const PointCloud& cloud);
PointCloud read_cloud_binary(const std::string& path);

// ASCII PLY with element vertex and float x/y/z properties (export only).
void write_cloud_ply(const std::string& path, const PointCloud& cloud);

void write_cloud(const std::string& path, const PointCloud& cloud, CloudFormat fmt);
PointCloud read_cloud(const std::string& path);  // dispatches on extension/magic

// PGM (P5) for 1-channel images, PPM (P6) for 3-channel, maxval 255.
void write_image(const std::string& path, const ImageTensor& img);
ImageTensor read_image(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace pcgen
