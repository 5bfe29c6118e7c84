#include "shield/distortion.hpp"

#include <cmath>
#include <csetjmp>
#include <cstring>
#include <stdexcept>

#include <jpeglib.h>

namespace shield {

std::string distortion_name(Distortion d) {
    switch (d) {
        case Distortion::identity: return "identity";
        case Distortion::gaussian_noise: return "gaussian_noise";
        case Distortion::gaussian_blur: return "gaussian_blur";
    }
    throw std::logic_error("distortion_name: bad value");
}

Distortion distortion_from_name(const std::string& name) {
    if (name == "identity") return Distortion::identity;
    if (name == "gaussian_noise" || name == "noise") return Distortion::gaussian_noise;
    if (name == "gaussian_blur" || name == "blur") return Distortion::gaussian_blur;
    throw std::invalid_argument("unknown distortion: " + name);
}

std::string eval_distortion_name(EvalDistortion d) {
    switch (d) {
        case EvalDistortion::noise: return "noise";
        case EvalDistortion::blur: return "blur";
        case EvalDistortion::jpeg: return "jpeg";
    }
    throw std::logic_error("eval_distortion_name: bad value");
}

Tensor gaussian_blur_kernel() {
    const double sigma = 0.4;
    Tensor k = Tensor::zeros({3, 3});
    double sum = 0;
    for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j) {
            double v = std::exp(-(i * i + j * j) / (2.0 * sigma * sigma));
            k.at2(i + 1, j + 1) = v;
            sum += v;
        }
    for (double& v : k.data) v /= sum;
    return k;
}

ad::Var diff_distortion(const ad::Var& image, Rng& rng, const std::vector<Distortion>& set) {
    if (set.empty()) throw std::invalid_argument("diff_distortion: empty distortion set");
    Distortion pick = set[static_cast<size_t>(rng.uniform_int(static_cast<int>(set.size())))];
    switch (pick) {
        case Distortion::identity:
            return image;
        case Distortion::gaussian_noise: {
            Tensor noise = rng.normal_tensor(image->value.shape, 0.05);
            return ad::clamp(ad::add_const(image, noise), 0.0, 1.0);
        }
        case Distortion::gaussian_blur:
            return ad::conv2d(image, ad::constant(gaussian_blur_kernel()), 1, 1,
                              ad::Padding::reflect);
    }
    throw std::logic_error("diff_distortion: bad pick");
}

Tensor apply_gaussian_noise(const Tensor& image, uint64_t seed, double sigma) {
    Rng rng(seed);
    Tensor out = image;
    for (double& v : out.data) v = std::min(1.0, std::max(0.0, v + sigma * rng.normal()));
    return out;
}

Tensor apply_gaussian_blur(const Tensor& image) {
    return ad::conv2d(ad::constant(image), ad::constant(gaussian_blur_kernel()), 1, 1,
                      ad::Padding::reflect)
        ->value;
}

namespace {

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    longjmp(mgr->jump, 1);
}

std::vector<unsigned char> to_bytes(const Tensor& image) {
    std::vector<unsigned char> bytes(image.data.size());
    for (size_t i = 0; i < image.data.size(); ++i) {
        double v = std::min(1.0, std::max(0.0, image.data[i]));
        bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    return bytes;
}

}  // namespace

Tensor apply_jpeg(const Tensor& image, int quality) {
    if (image.ndim() != 3 || image.dim(2) != 3)
        throw std::invalid_argument("apply_jpeg: expected HxWx3 image");
    int H = image.dim(0), W = image.dim(1);
    std::vector<unsigned char> rgb = to_bytes(image);

    // encode
    jpeg_compress_struct cinfo;
    JpegErrorMgr jerr;
    cinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = jpeg_error_exit;
    unsigned char* buf = nullptr;
    unsigned long buf_size = 0;
    if (setjmp(jerr.jump)) {
        jpeg_destroy_compress(&cinfo);
        free(buf);
        throw std::runtime_error("apply_jpeg: encoder failure");
    }
    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, &buf, &buf_size);
    cinfo.image_width = static_cast<JDIMENSION>(W);
    cinfo.image_height = static_cast<JDIMENSION>(H);
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);  // baseline, 4:2:0 chroma subsampling
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW row = &rgb[static_cast<size_t>(cinfo.next_scanline) * W * 3];
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);

    // decode
    jpeg_decompress_struct dinfo;
    JpegErrorMgr derr;
    dinfo.err = jpeg_std_error(&derr.pub);
    derr.pub.error_exit = jpeg_error_exit;
    if (setjmp(derr.jump)) {
        jpeg_destroy_decompress(&dinfo);
        free(buf);
        throw std::runtime_error("apply_jpeg: decoder failure");
    }
    jpeg_create_decompress(&dinfo);
    jpeg_mem_src(&dinfo, buf, buf_size);
    jpeg_read_header(&dinfo, TRUE);
    jpeg_start_decompress(&dinfo);
    if (dinfo.output_components != 3)
        throw std::runtime_error("apply_jpeg: unexpected component count");
    std::vector<unsigned char> out_rgb(static_cast<size_t>(H) * W * 3);
    while (dinfo.output_scanline < dinfo.output_height) {
        JSAMPROW row = &out_rgb[static_cast<size_t>(dinfo.output_scanline) * W * 3];
        jpeg_read_scanlines(&dinfo, &row, 1);
    }
    jpeg_finish_decompress(&dinfo);
    jpeg_destroy_decompress(&dinfo);
    free(buf);

    Tensor out = Tensor::zeros({H, W, 3});
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = out_rgb[i] / 255.0;
    return out;
}

Tensor eval_distortion(const Tensor& image, EvalDistortion kind, uint64_t seed) {
    switch (kind) {
        case EvalDistortion::noise: return apply_gaussian_noise(image, seed);
        case EvalDistortion::blur: return apply_gaussian_blur(image);
        case EvalDistortion::jpeg: return apply_jpeg(image);
    }
    throw std::logic_error("eval_distortion: bad kind");
}

}  // namespace shield
