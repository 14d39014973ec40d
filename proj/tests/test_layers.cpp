#include <doctest.h>

#include "test_util.hpp"
#include "tosmtl/adam.hpp"
#include "tosmtl/layers.hpp"

using namespace tosmtl;
using namespace tosmtl::nn;
using tosmtl::testutil::layer_fd_error;
using tosmtl::testutil::random_tensor;

TEST_CASE("conv2d identity kernel reproduces the input") {
    Conv2d conv("c", 1, 1, 1);
    conv.kernels().value.data = {1.0};
    conv.bias().value.data = {0.0};
    Tensor in({1, 1, 2, 2});
    in.data = {1, 2, 3, 4};
    Tensor out = conv.forward(in, Mode::eval);
    CHECK(out.shape == std::vector<std::size_t>{1, 1, 2, 2});
    CHECK(out.data == in.data);
}

TEST_CASE("conv2d 3x3 all-ones kernel with zero padding") {
    Conv2d conv("c", 1, 1, 3);
    conv.kernels().value.fill(1.0);
    conv.bias().value.fill(0.0);
    Tensor in({1, 1, 2, 2});
    in.data = {1, 2, 3, 4};
    Tensor out = conv.forward(in, Mode::eval);
    for (double v : out.data) CHECK(v == doctest::Approx(10.0).epsilon(1e-15));
}

TEST_CASE("conv2d even kernel size rejected") {
    CHECK_THROWS_AS(Conv2d("c", 1, 1, 2), ConfigError);
}

TEST_CASE("conv2d backward: zero upstream gives zero gradients") {
    Rng rng(7);
    Conv2d conv("c", 2, 3, 3);
    conv.init_params(rng);
    Tensor in = random_tensor({1, 2, 5, 6}, rng);
    conv.forward(in, Mode::train);
    Tensor up({1, 3, 5, 6});
    Tensor gin = conv.backward(up);
    for (double v : gin.data) CHECK(v == 0.0);
    for (double v : conv.kernels().grad.data) CHECK(v == 0.0);
    for (double v : conv.bias().grad.data) CHECK(v == 0.0);
}

TEST_CASE("conv2d backward: scalar product rule") {
    Conv2d conv("c", 1, 1, 1);
    conv.kernels().value.data = {2.0};
    conv.bias().value.data = {0.0};
    Tensor in({1, 1, 1, 1});
    in.data = {3.0};
    conv.forward(in, Mode::train);
    Tensor up({1, 1, 1, 1});
    up.data = {1.0};
    Tensor gin = conv.backward(up);
    CHECK(gin.data[0] == doctest::Approx(2.0));             // d out / d input = kernel
    CHECK(conv.kernels().grad.data[0] == doctest::Approx(3.0));  // d out / d kernel = input
    CHECK(conv.bias().grad.data[0] == doctest::Approx(1.0));
}

TEST_CASE("conv2d backward matches central finite differences") {
    Rng rng(42);
    Conv2d conv("c", 2, 4, 3);
    conv.init_params(rng);
    Tensor in = random_tensor({1, 2, 5, 6}, rng);
    CHECK(layer_fd_error(conv, in) < 1e-6);
}

TEST_CASE("conv2d backward before forward is a usage error") {
    Conv2d conv("c", 1, 1, 3);
    Tensor up({1, 1, 2, 2});
    CHECK_THROWS_AS(conv.backward(up), UsageError);
}

TEST_CASE("maxpool ceil mode: truncated edge window") {
    MaxPool2d pool("p", 1, 2);
    Tensor in({1, 1, 1, 3});
    in.data = {1, 5, 2};
    Tensor out = pool.forward(in, Mode::eval);
    CHECK(out.shape == std::vector<std::size_t>{1, 1, 1, 2});
    CHECK(out.data[0] == 5.0);
    CHECK(out.data[1] == 2.0);
}

TEST_CASE("maxpool 2x2 full window") {
    MaxPool2d pool("p", 2, 2);
    Tensor in({1, 1, 2, 2});
    in.data = {1, 2, 3, 4};
    Tensor out = pool.forward(in, Mode::eval);
    CHECK(out.shape == std::vector<std::size_t>{1, 1, 1, 1});
    CHECK(out.data[0] == 4.0);
}

TEST_CASE("maxpool on constant input keeps the constant at reduced shape") {
    MaxPool2d pool("p", 2, 2);
    Tensor in({1, 2, 5, 7}, 3.25);
    Tensor out = pool.forward(in, Mode::eval);
    CHECK(out.shape == std::vector<std::size_t>{1, 2, 3, 4});  // ceil(5/2) x ceil(7/2)
    for (double v : out.data) CHECK(v == 3.25);
}

TEST_CASE("maxpool output dims are exactly ceil(dim/window); window 1 is identity") {
    Rng rng(3);
    for (std::size_t h : {1u, 2u, 3u, 5u, 9u, 18u}) {
        for (std::size_t w : {1u, 2u, 6u, 48u}) {
            Tensor in = random_tensor({1, 1, h, w}, rng);
            MaxPool2d pool("p", 2, 2);
            Tensor out = pool.forward(in, Mode::eval);
            CHECK(out.shape[2] == (h + 1) / 2);
            CHECK(out.shape[3] == (w + 1) / 2);

            MaxPool2d identity("i", 1, 1);
            Tensor same = identity.forward(in, Mode::eval);
            CHECK(same.data == in.data);
        }
    }
}

TEST_CASE("maxpool backward routes gradient to the argmax") {
    MaxPool2d pool("p", 2, 2);
    Tensor in({1, 1, 2, 2});
    in.data = {1, 2, 3, 4};
    pool.forward(in, Mode::train);
    Tensor up({1, 1, 1, 1});
    up.data = {5.0};
    Tensor gin = pool.backward(up);
    CHECK(gin.data == std::vector<double>{0, 0, 0, 5});
}

TEST_CASE("batchnorm: constant feature batch maps to zeros") {
    BatchNorm bn("b", 3);
    Tensor in({4, 3}, 2.5);
    Tensor out = bn.forward(in, Mode::train);
    for (double v : out.data) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("batchnorm: unit-variance batch approximately preserved") {
    BatchNorm bn("b", 1);
    Tensor in({2, 1});
    in.data = {-1.0, 1.0};
    Tensor out = bn.forward(in, Mode::train);
    CHECK(out.data[0] == doctest::Approx(-1.0).epsilon(1e-4));
    CHECK(out.data[1] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("batchnorm: B=1 in train mode is a configuration error") {
    BatchNorm bn("b", 4);
    Tensor in({1, 4}, 1.0);
    CHECK_THROWS_AS(bn.forward(in, Mode::train), ConfigError);
}

TEST_CASE("batchnorm backward matches finite differences (2-D and 4-D)") {
    Rng rng(11);
    {
        BatchNorm bn("b", 5);
        bn.init_params(rng);
        for (std::size_t i = 0; i < 5; ++i) {
            bn.params()[0]->value.data[i] = rng.uniform(0.5, 1.5);
            bn.params()[1]->value.data[i] = rng.uniform(-0.5, 0.5);
        }
        Tensor in = random_tensor({6, 5}, rng);
        CHECK(layer_fd_error(bn, in) < 1e-5);
    }
    {
        BatchNorm bn("b", 3);
        Tensor in = random_tensor({2, 3, 4, 5}, rng);
        CHECK(layer_fd_error(bn, in) < 1e-5);
    }
}

TEST_CASE("batchnorm eval mode uses running statistics") {
    BatchNorm bn("b", 1);
    Tensor in({2, 1});
    in.data = {-1.0, 1.0};
    // fresh layer: running mean 0, var 1 -> eval is identity for gamma=1, beta=0
    Tensor out = bn.forward(in, Mode::eval);
    CHECK(out.data[0] == doctest::Approx(-1.0).epsilon(1e-5));
    CHECK(out.data[1] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("fully connected: identity weight, zero bias") {
    FullyConnected fc("f", 3, 3);
    fc.weight().value.fill(0.0);
    for (std::size_t i = 0; i < 3; ++i) fc.weight().value.data[i * 3 + i] = 1.0;
    Tensor in({2, 3});
    in.data = {1, 2, 3, 4, 5, 6};
    Tensor out = fc.forward(in, Mode::eval);
    CHECK(out.data == in.data);
}

TEST_CASE("fully connected: weight [[1,1]], bias [1], input [2,3] -> [6]") {
    FullyConnected fc("f", 2, 1);
    fc.weight().value.data = {1.0, 1.0};
    fc.bias().value.data = {1.0};
    Tensor in({1, 2});
    in.data = {2, 3};
    Tensor out = fc.forward(in, Mode::eval);
    CHECK(out.data[0] == doctest::Approx(6.0));
}

TEST_CASE("fully connected backward matches finite differences") {
    Rng rng(5);
    FullyConnected fc("f", 7, 4);
    fc.init_params(rng);
    Tensor in = random_tensor({3, 7}, rng);
    CHECK(layer_fd_error(fc, in) < 1e-6);
}

TEST_CASE("shifted leaky relu formula values") {
    ShiftedLeakyReLU act("a", 0.01, 17.0);
    Tensor in({1, 3});
    in.data = {0.0, 100.0, -100.0};
    Tensor out = act.forward(in, Mode::eval);
    CHECK(out.data[0] == doctest::Approx(17.0));
    CHECK(out.data[1] == doctest::Approx(117.0));
    CHECK(out.data[2] == doctest::Approx(16.0));
}

TEST_CASE("shifted leaky relu gradient: 1 for x >= 0, alpha for x < 0") {
    ShiftedLeakyReLU act("a", 0.25, 17.0);
    Tensor in({1, 3});
    in.data = {0.0, 2.0, -2.0};
    act.forward(in, Mode::train);
    Tensor up({1, 3}, 1.0);
    Tensor gin = act.backward(up);
    CHECK(gin.data[0] == 1.0);
    CHECK(gin.data[1] == 1.0);
    CHECK(gin.data[2] == 0.25);
}

TEST_CASE("shifted leaky relu rejects bad slope") {
    CHECK_THROWS_AS(ShiftedLeakyReLU("a", 1.5, 17.0), ConfigError);
    CHECK_THROWS_AS(ShiftedLeakyReLU("a", 0.0, 17.0), ConfigError);
}

TEST_CASE("forward passes are pure: repeated calls bitwise identical") {
    Rng rng(99);
    Conv2d conv("c", 2, 4, 3);
    conv.init_params(rng);
    Tensor in = random_tensor({2, 2, 6, 8}, rng);
    Tensor a = conv.forward(in, Mode::eval);
    Tensor b = conv.forward(in, Mode::eval);
    CHECK(a.data == b.data);

    Sequential seq;
    seq.add(std::make_unique<MaxPool2d>("p", 2, 2));
    seq.add(std::make_unique<ReLU>("r"));
    Tensor c = seq.forward(in, Mode::eval);
    Tensor d = seq.forward(in, Mode::eval);
    CHECK(c.data == d.data);
}
