#ifndef FAIRMESH_FAIRMESH_HPP
#define FAIRMESH_FAIRMESH_HPP

#include "fairmesh/fairness.hpp"
#include "fairmesh/fixtures.hpp"
#include "fairmesh/io.hpp"
#include "fairmesh/mesh.hpp"
#include "fairmesh/metrics.hpp"
#include "fairmesh/mollifier.hpp"
#include "fairmesh/pipelines.hpp"

#endif  // FAIRMESH_FAIRMESH_HPP
