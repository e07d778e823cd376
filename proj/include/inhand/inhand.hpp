#ifndef INHAND_INHAND_HPP
#define INHAND_INHAND_HPP

#include "inhand/contact.hpp"
#include "inhand/correspondence.hpp"
#include "inhand/error.hpp"
#include "inhand/features.hpp"
#include "inhand/frame.hpp"
#include "inhand/fusion.hpp"
#include "inhand/geometry.hpp"
#include "inhand/io.hpp"
#include "inhand/log.hpp"
#include "inhand/metrics.hpp"
#include "inhand/parallel.hpp"
#include "inhand/pipeline.hpp"
#include "inhand/ply.hpp"
#include "inhand/preprocess.hpp"
#include "inhand/registration.hpp"
#include "inhand/sequence.hpp"
#include "inhand/spatial_index.hpp"
#include "inhand/synth.hpp"

#endif  // INHAND_INHAND_HPP
