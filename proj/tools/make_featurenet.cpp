// Writes the seeded reference feature net to the given path.

#include <iostream>

#include "hsprobe/perceptual.hpp"

int main(int argc, char** argv)
{
    if (argc != 2) {
        std::cerr << "usage: make_featurenet <output path>\n";
        return 2;
    }
    hsprobe::save_feature_net(argv[1], hsprobe::make_reference_feature_net());
    return 0;
}
