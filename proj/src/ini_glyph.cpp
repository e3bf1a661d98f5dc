// Generated from data/ini_glyph.txt.
#include "ncsim/spike_trains.hpp"

namespace ncsim::engine {

const Bitmap& ini_glyph()
{
    static const Bitmap glyph = Bitmap::parse(
    "............................................................................................................................\n"
    "............................................................................................................................\n"
    "............................................................................................................................\n"
    "..............##################............############..................######............##################..............\n"
    "..............##################............######.######.................######............##################..............\n"
    "..............##################............######..######................######............##################..............\n"
    "....................######..................######...######...............######..................######....................\n"
    "....................######..................######...######...............######..................######....................\n"
    "....................######..................######....######..............######..................######....................\n"
    "....................######..................######.....######.............######..................######....................\n"
    "....................######..................######......######............######..................######....................\n"
    "....................######..................######.......######...........######..................######....................\n"
    "....................######..................######........######..........######..................######....................\n"
    "....................######..................######.........######.........######..................######....................\n"
    "....................######..................######.........######.........######..................######....................\n"
    "....................######..................######..........######........######..................######....................\n"
    "....................######..................######...........######.......######..................######....................\n"
    "....................######..................######............######......######..................######....................\n"
    "....................######..................######.............######.....######..................######....................\n"
    "....................######..................######..............######....######..................######....................\n"
    "....................######..................######...............######...######..................######....................\n"
    "....................######..................######...............######...######..................######....................\n"
    "..............##################............######................######..######............##################..............\n"
    "..............##################............######.................######.######............##################..............\n"
    "..............##################............######..................############............##################..............\n"
    "............................................................................................................................\n"
    "............................................................................................................................\n"
    "............................................................................................................................\n");
    return glyph;
}

}  // namespace ncsim::engine
