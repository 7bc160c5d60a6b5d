#pragma once

// Umbrella header: the whole library.

#include "rigor/interval.hpp"
#include "rigor/vec.hpp"
#include "rigor/polyfield.hpp"
#include "rigor/integrator.hpp"
#include "rigor/poincare.hpp"
#include "rigor/covering.hpp"
#include "rigor/newton.hpp"
#include "rigor/certificate.hpp"
#include "rigor/cases.hpp"
#include "rigor/nonrigorous.hpp"
