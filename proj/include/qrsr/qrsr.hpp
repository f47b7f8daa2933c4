#pragma once

#include "qrsr/errors.hpp"
#include "qrsr/geometry.hpp"
#include "qrsr/image.hpp"
#include "qrsr/gf256.hpp"
#include "qrsr/reed_solomon.hpp"
#include "qrsr/qr_types.hpp"
#include "qrsr/qr_code.hpp"
#include "qrsr/qr_decode.hpp"
#include "qrsr/sampling.hpp"
#include "qrsr/scan_loss.hpp"
#include "qrsr/qart.hpp"
#include "qrsr/perceptual.hpp"
#include "qrsr/refine.hpp"
#include "qrsr/tilt.hpp"
#include "qrsr/verify.hpp"
#include "qrsr/png_io.hpp"
#include "qrsr/serialize.hpp"
#include "qrsr/util.hpp"
