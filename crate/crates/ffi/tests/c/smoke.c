#include <math.h>
#include <stdio.h>
#include "fftsvd.h"

#define CHECK(cond)                                        \
    do {                                                   \
        if (!(cond)) {                                     \
            fprintf(stderr, "line %d: %s\n", __LINE__, #cond); \
            return 1;                                      \
        }                                                  \
    } while (0)

int main(void) {
    double re[8] = {1, 0, 0, 0, 0, 0, 0, 0}, im[8] = {0};
    double out_re[8], out_im[8], scale = 0;
    bool ovf = true;
    CHECK(fftsvd_fft(re, im, 8, NULL, false, out_re, out_im, &scale, &ovf) == FFTSVD_STATUS_OK);
    for (int k = 0; k < 8; k++) CHECK(fabs(out_re[k] - 1.0) < 1e-15 && fabs(out_im[k]) < 1e-15);
    CHECK(scale == 1.0 && !ovf);

    FftsvdPipeline *p = NULL;
    FftsvdQFormat q = {2, 14};
    CHECK(fftsvd_pipeline_new(8, &q, true, &p) == FFTSVD_STATUS_OK);
    uint64_t lat = 0;
    CHECK(fftsvd_pipeline_latency(p, &lat) == FFTSVD_STATUS_OK && lat == 10);
    CHECK(fftsvd_pipeline_run(p, re, im, 7, out_re, out_im, NULL, NULL) == FFTSVD_STATUS_DIMENSION);
    char msg[128];
    CHECK(fftsvd_last_error(msg, sizeof msg) > 0);
    fftsvd_pipeline_free(p);

    double a[4] = {3, 0, 4, 5}, s[2];
    FftsvdSvd *h = NULL;
    CHECK(fftsvd_svd(a, 2, 2, 0, 0, NULL, &h) == FFTSVD_STATUS_OK);
    CHECK(fftsvd_svd_sigma(h, s, 2) == FFTSVD_STATUS_OK);
    CHECK(fabs(s[0] - sqrt(45.0)) < 1e-9 && fabs(s[1] - sqrt(5.0)) < 1e-9);
    fftsvd_svd_free(h);

    double x, y;
    CHECK(fftsvd_cordic_vector(3, 4, 32, &x, &y) == FFTSVD_STATUS_OK && fabs(x - 5) < 1e-8);

    FftsvdWatermarkKey key;
    CHECK(fftsvd_watermark_key_default(5, &key) == FFTSVD_STATUS_OK && key.block_size == 32);
    printf("ok\n");
    return 0;
}
