#include <cstdio>

#include "cwsep/nn.hpp"
#include "cwsep/nn_builders.hpp"
#include "../proj/tests/helpers.hpp"

using namespace cwsep;

int main() {
    using B = nndetail::NetBuilder<double>;

    auto check = [&](const char* name, NetworkGraph<double> net, int h, int w, int in_c) {
        Tensor4<double> x = testutil::random_tensor(1, in_c, h, w, 11);
        auto fd = testutil::finite_difference_check(net, x, 80, 555);
        std::printf("%-28s max_rel_err = %.3e\n", name, fd.max_rel_err);
    };

    {
        B b(3);
        int id = b.add(LayerKind::conv3x3, 0, 4);
        check("conv3x3", b.finish(id, 1, "t", 1), 6, 8, 3);
    }
    {
        B b(3);
        int id = b.add(LayerKind::conv1x1, 0, 4);
        check("conv1x1", b.finish(id, 1, "t", 1), 6, 8, 3);
    }
    {
        B b(3);
        int id = b.add(LayerKind::conv3x3, 0, 4);
        id = b.add(LayerKind::batchnorm, id);
        check("conv+bn", b.finish(id, 1, "t", 2), 6, 8, 3);
    }
    {
        B b(3);
        int id = b.add(LayerKind::conv3x3, 0, 4);
        id = b.add(LayerKind::batchnorm, id);
        id = b.add(LayerKind::relu, id);
        check("conv+bn+relu", b.finish(id, 1, "t", 3), 6, 8, 3);
    }
    {
        B b(3);
        int id = b.add(LayerKind::conv3x3, 0, 4);
        id = b.add(LayerKind::maxpool2, id);
        check("conv+pool", b.finish(id, 2, "t", 4), 6, 8, 3);
    }
    {
        B b(3);
        int id = b.add(LayerKind::conv3x3, 0, 4);
        id = b.add(LayerKind::upsample2_linear, id);
        check("conv+upsample", b.finish(id, 1, "t", 5), 6, 8, 3);
    }
    {
        B b(3);
        int id = b.add(LayerKind::conv3x3, 0, 4);
        id = b.add(LayerKind::sigmoid, id);
        check("conv+sigmoid", b.finish(id, 1, "t", 6), 6, 8, 3);
    }
    {
        B b(3);
        int c1 = b.add(LayerKind::conv3x3, 0, 4);
        int c2 = b.add(LayerKind::concat, c1, 0, 0);
        int c3 = b.add(LayerKind::conv3x3, c2, 2);
        check("conv+concat+conv", b.finish(c3, 1, "t", 7), 6, 8, 3);
    }
    {
        B b(3);
        int id = b.conv_bn_relu(0, 4);
        id = b.add(LayerKind::maxpool2, id);
        id = b.conv_bn_relu(id, 6);
        id = b.add(LayerKind::upsample2_linear, id);
        check("mini encoder-decoder", b.finish(id, 2, "t", 8), 6, 8, 3);
    }
    return 0;
}
