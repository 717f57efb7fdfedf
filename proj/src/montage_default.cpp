#include "tann/montage.hpp"

namespace tann {

// 62-channel cap on a 9x9 grid with the 16-region parcellation used
// throughout. Kept byte-identical with data/montage_seed62.txt.
const char* default_montage_text() {
  return R"(# 62-channel EEG montage, 9x9 scalp grid, 16 regions
# NAME ROW COL REGION
FP1 0 3 Pre-Frontal
FPZ 0 4 Pre-Frontal
FP2 0 5 Pre-Frontal
AF3 1 3 Pre-Frontal
AF4 1 5 Pre-Frontal
F7 2 0 Left-Frontal
F5 2 1 Left-Frontal
F3 2 2 Frontal
F1 2 3 Frontal
FZ 2 4 Frontal
F2 2 5 Frontal
F4 2 6 Frontal
F6 2 7 Right-Frontal
F8 2 8 Right-Frontal
FT7 3 0 Left-Temporal
FC5 3 1 Left-Temporal
FC3 3 2 Frontal-Central
FC1 3 3 Frontal-Central
FCZ 3 4 Frontal-Central
FC2 3 5 Frontal-Central
FC4 3 6 Frontal-Central
FC6 3 7 Right-Temporal
FT8 3 8 Right-Temporal
T7 4 0 Left-Temporal
C5 4 1 Left-Temporal
C3 4 2 Central
C1 4 3 Central
CZ 4 4 Central
C2 4 5 Central
C4 4 6 Central
C6 4 7 Right-Temporal
T8 4 8 Right-Temporal
TP7 5 0 Left-Temporal
CP5 5 1 Left-Temporal
CP3 5 2 Central-Parietal
CP1 5 3 Central-Parietal
CPZ 5 4 Central-Parietal
CP2 5 5 Central-Parietal
CP4 5 6 Central-Parietal
CP6 5 7 Right-Temporal
TP8 5 8 Right-Temporal
P7 6 0 Left-Parietal
P5 6 1 Left-Parietal
P3 6 2 Parietal
P1 6 3 Parietal
PZ 6 4 Parietal
P2 6 5 Parietal
P4 6 6 Parietal
P6 6 7 Right-Parietal
P8 6 8 Right-Parietal
PO7 7 1 Left-Parietal-Occipital
PO5 7 2 Left-Parietal-Occipital
PO3 7 3 Parietal-Occipital
POZ 7 4 Parietal-Occipital
PO4 7 5 Parietal-Occipital
PO6 7 6 Right-Parietal-Occipital
PO8 7 7 Right-Parietal-Occipital
CB1 8 2 Left-Parietal-Occipital
O1 8 3 Occipital
OZ 8 4 Occipital
O2 8 5 Occipital
CB2 8 6 Right-Parietal-Occipital
)";
}

}  // namespace tann
