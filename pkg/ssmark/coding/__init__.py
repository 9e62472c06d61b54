"""Joint source (Golomb) and channel (convolutional) coding of watermarks"""

from ssmark.coding.golomb import (BitStream, GolombParam, TruncatedStreamError,
    CorruptStreamError, optimal_m, encode_bitmap, decode_bitmap, salvage_bitmap)
from ssmark.coding.convcode import (ConvCodeSpec, Codeword, FramingError,
    K7_STANDARD, K3_TEST, get_conv_code, conv_encode, viterbi_decode)
