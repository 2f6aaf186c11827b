use std::ptr;

use fftsvd_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { fftsvd_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

const Q2_14: FftsvdQFormat = FftsvdQFormat {
    int_bits: 2,
    frac_bits: 14,
};

#[test]
fn fft_matches_dft() {
    let re: Vec<f64> = (0..16).map(|k| (k as f64 * 0.3).sin()).collect();
    let im: Vec<f64> = (0..16).map(|k| (k as f64 * 0.7).cos() * 0.5).collect();
    let (mut fr, mut fi, mut dr, mut di) = (vec![0.0; 16], vec![0.0; 16], vec![0.0; 16], vec![0.0; 16]);
    let (mut scale, mut ovf) = (0.0, true);
    unsafe {
        let st = fftsvd_fft(
            re.as_ptr(),
            im.as_ptr(),
            16,
            ptr::null(),
            false,
            fr.as_mut_ptr(),
            fi.as_mut_ptr(),
            &mut scale,
            &mut ovf,
        );
        assert_eq!(st, FftsvdStatus::Ok);
        assert_eq!(fftsvd_dft_naive(re.as_ptr(), im.as_ptr(), 16, dr.as_mut_ptr(), di.as_mut_ptr()), FftsvdStatus::Ok);
    }
    assert_eq!((scale, ovf), (1.0, false));
    for k in 0..16 {
        assert!((fr[k] - dr[k]).abs() < 1e-12 && (fi[k] - di[k]).abs() < 1e-12);
    }
    assert_eq!(last_error(), "");
}

#[test]
fn fixed_fft_reports_scale_and_strict_overflow() {
    let (re, im) = (vec![1.0; 8], vec![0.0; 8]);
    let (mut or, mut oi) = (vec![0.0; 8], vec![0.0; 8]);
    let (mut scale, mut ovf) = (0.0, false);
    let st = unsafe {
        fftsvd_fft(re.as_ptr(), im.as_ptr(), 8, &Q2_14, true, or.as_mut_ptr(), oi.as_mut_ptr(), &mut scale, &mut ovf)
    };
    assert_eq!(st, FftsvdStatus::Overflow);
    assert!(ovf);
    assert_eq!(scale, 0.25);
    assert!(last_error().contains("overflow"));

    let half = [0.5; 8];
    let st = unsafe {
        fftsvd_fft(half.as_ptr(), im.as_ptr(), 8, &Q2_14, true, or.as_mut_ptr(), oi.as_mut_ptr(), &mut scale, &mut ovf)
    };
    assert_eq!(st, FftsvdStatus::Ok);
    assert_eq!(or[0], 1.0);
}

#[test]
fn errors_are_reported() {
    let v = [0.0; 3];
    let mut o = [0.0; 3];
    let st = unsafe {
        fftsvd_fft(v.as_ptr(), v.as_ptr(), 3, ptr::null(), false, o.as_mut_ptr(), o.as_mut_ptr(), ptr::null_mut(), ptr::null_mut())
    };
    assert_eq!(st, FftsvdStatus::Dimension);
    assert!(last_error().contains("power of two"));
    let st = unsafe { fftsvd_dft_naive(ptr::null(), v.as_ptr(), 3, o.as_mut_ptr(), o.as_mut_ptr()) };
    assert_eq!(st, FftsvdStatus::NullPointer);
    let bad = FftsvdQFormat { int_bits: 0, frac_bits: 0 };
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { fftsvd_pipeline_new(8, &bad, true, &mut p) }, FftsvdStatus::InvalidArgument);
    assert!(p.is_null());
    // truncated copy keeps the full length
    let mut small = [0 as std::ffi::c_char; 4];
    let n = unsafe { fftsvd_last_error(small.as_mut_ptr(), 4) };
    assert!(n > 3);
    assert_eq!(small[3], 0);
    assert_eq!(unsafe { fftsvd_last_error(ptr::null_mut(), 0) }, n);
}

#[test]
fn pipeline_handle_streams_frames() {
    let n = 16;
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(fftsvd_pipeline_new(n, ptr::null(), true, &mut p), FftsvdStatus::Ok);
        let mut lat = 0;
        assert_eq!(fftsvd_pipeline_latency(p, &mut lat), FftsvdStatus::Ok);
        assert_eq!(lat, 15 + 4);

        let re: Vec<f64> = (0..2 * n).map(|k| (k % 5) as f64 - 2.0).collect();
        let im = vec![0.25; 2 * n];
        let (mut or, mut oi, mut cyc) = (vec![0.0; 2 * n], vec![0.0; 2 * n], vec![0u64; 2 * n]);
        let mut ovf = true;
        let st = fftsvd_pipeline_run(p, re.as_ptr(), im.as_ptr(), 2 * n, or.as_mut_ptr(), oi.as_mut_ptr(), cyc.as_mut_ptr(), &mut ovf);
        assert_eq!(st, FftsvdStatus::Ok);
        assert!(!ovf);
        assert_eq!(cyc[0], lat);
        for f in 0..2 {
            let (mut dr, mut di) = (vec![0.0; n], vec![0.0; n]);
            fftsvd_dft_naive(re[f * n..].as_ptr(), im[f * n..].as_ptr(), n, dr.as_mut_ptr(), di.as_mut_ptr());
            for k in 0..n {
                assert!((or[f * n + k] - dr[k]).abs() < 1e-9 && (oi[f * n + k] - di[k]).abs() < 1e-9);
            }
        }
        let st = fftsvd_pipeline_run(p, re.as_ptr(), im.as_ptr(), 5, or.as_mut_ptr(), oi.as_mut_ptr(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(st, FftsvdStatus::Dimension);
        assert_eq!(fftsvd_pipeline_reset(p), FftsvdStatus::Ok);
        fftsvd_pipeline_free(p);
        fftsvd_pipeline_free(ptr::null_mut());
        assert_eq!(fftsvd_pipeline_reset(ptr::null_mut()), FftsvdStatus::NullPointer);
    }
}

#[test]
fn fixed_pipeline_matches_fixed_block() {
    let n = 64;
    let re: Vec<f64> = (0..n).map(|k| ((k * 37 % 11) as f64 - 5.0) / 6.0).collect();
    let im: Vec<f64> = (0..n).map(|k| ((k * 13 % 7) as f64 - 3.0) / 4.0).collect();
    let (mut sr, mut si, mut br, mut bi) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(fftsvd_pipeline_new(n, &Q2_14, true, &mut p), FftsvdStatus::Ok);
        fftsvd_pipeline_run(p, re.as_ptr(), im.as_ptr(), n, sr.as_mut_ptr(), si.as_mut_ptr(), ptr::null_mut(), ptr::null_mut());
        fftsvd_pipeline_free(p);
        fftsvd_fft(re.as_ptr(), im.as_ptr(), n, &Q2_14, false, br.as_mut_ptr(), bi.as_mut_ptr(), ptr::null_mut(), ptr::null_mut());
    }
    assert_eq!(sr, br);
    assert_eq!(si, bi);
}

#[test]
fn svd_handle() {
    let a = [3.0, 0.0, 4.0, 5.0];
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(fftsvd_svd(a.as_ptr(), 2, 2, 0.0, 0, ptr::null(), &mut h), FftsvdStatus::Ok);
        let (mut m, mut n, mut sweeps, mut res) = (0, 0, 0, 1.0);
        fftsvd_svd_shape(h, &mut m, &mut n, &mut sweeps, &mut res);
        assert_eq!((m, n), (2, 2));
        assert!(sweeps >= 1 && res <= 1e-8, "{sweeps} {res:e}");
        let mut s = [0.0; 2];
        assert_eq!(fftsvd_svd_sigma(h, s.as_mut_ptr(), 2), FftsvdStatus::Ok);
        assert!((s[0] - 45f64.sqrt()).abs() < 1e-9 && (s[1] - 5f64.sqrt()).abs() < 1e-9);
        let (mut u, mut v) = ([0.0; 4], [0.0; 4]);
        assert_eq!(fftsvd_svd_u(h, u.as_mut_ptr(), 4), FftsvdStatus::Ok);
        assert_eq!(fftsvd_svd_v(h, v.as_mut_ptr(), 4), FftsvdStatus::Ok);
        for i in 0..2 {
            for j in 0..2 {
                let r: f64 = (0..2).map(|k| u[i * 2 + k] * s[k] * v[j * 2 + k]).sum();
                assert!((r - a[i * 2 + j]).abs() < 1e-8);
            }
        }
        assert_eq!(fftsvd_svd_sigma(h, s.as_mut_ptr(), 1), FftsvdStatus::Dimension);
        fftsvd_svd_free(h);
    }
}

#[test]
fn svd_partial_on_sweep_limit() {
    let a: Vec<f64> = (0..36).map(|k| ((k * 7919) % 23) as f64 - 11.0).collect();
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(fftsvd_svd(a.as_ptr(), 6, 6, 1e-15, 1, ptr::null(), &mut h), FftsvdStatus::NoConvergence);
        assert!(!h.is_null());
        let mut sweeps = 0;
        fftsvd_svd_shape(h, ptr::null_mut(), ptr::null_mut(), &mut sweeps, ptr::null_mut());
        assert_eq!(sweeps, 1);
        fftsvd_svd_free(h);
        assert_eq!(fftsvd_svd(a.as_ptr(), 0, 6, 0.0, 0, ptr::null(), &mut h), FftsvdStatus::Dimension);
        assert!(h.is_null());
    }
}

#[test]
fn fixed_svd() {
    let a = [0.5, -0.25, 0.125, 0.75];
    let mut h = ptr::null_mut();
    let mut s = [0.0; 2];
    unsafe {
        assert_eq!(fftsvd_svd(a.as_ptr(), 2, 2, 0.0, 0, &Q2_14, &mut h), FftsvdStatus::Ok);
        fftsvd_svd_sigma(h, s.as_mut_ptr(), 2);
        fftsvd_svd_free(h);
    }
    let mut exact = ptr::null_mut();
    let mut e = [0.0; 2];
    unsafe {
        fftsvd_svd(a.as_ptr(), 2, 2, 0.0, 0, ptr::null(), &mut exact);
        fftsvd_svd_sigma(exact, e.as_mut_ptr(), 2);
        fftsvd_svd_free(exact);
    }
    assert!((s[0] - e[0]).abs() < 1e-2 && (s[1] - e[1]).abs() < 1e-2);
}

#[test]
fn cordic_calls() {
    let (mut x, mut y) = (0.0, 0.0);
    unsafe {
        assert_eq!(fftsvd_cordic_rotate(1.0, 0.0, std::f64::consts::FRAC_PI_2, 32, &mut x, &mut y), FftsvdStatus::Ok);
        assert!(x.abs() < 1e-8 && (y - 1.0).abs() < 1e-8);
        assert_eq!(fftsvd_cordic_vector(3.0, 4.0, 32, &mut x, &mut y), FftsvdStatus::Ok);
        assert!((x - 5.0).abs() < 1e-8 && (y - (4f64).atan2(3.0)).abs() < 1e-8);
        assert_eq!(fftsvd_cordic_vector(0.0, 0.0, 32, &mut x, &mut y), FftsvdStatus::InvalidArgument);
        assert_eq!(fftsvd_cordic_rotate(1.0, 0.0, 0.0, 0, &mut x, &mut y), FftsvdStatus::InvalidArgument);
        assert_eq!(fftsvd_cordic_rotate(1.0, 0.0, 0.0, 8, ptr::null_mut(), &mut y), FftsvdStatus::NullPointer);
    }
}

#[test]
fn watermark_round_trip() {
    let host = fftsvd::watermark::synthetic_host(128, 128, 2);
    let mut key = FftsvdWatermarkKey {
        seed: 0,
        block_row: 0,
        block_col: 0,
        block_size: 0,
        alpha: 0.0,
    };
    unsafe { fftsvd_watermark_key_default(77, &mut key) };
    assert_eq!((key.seed, key.block_size), (77, 32));
    key.block_size = 16;
    let bits: Vec<u8> = (0..15).map(|k| (k * 5 % 3 == 1) as u8).collect();
    let mut marked = vec![0.0; 128 * 128];
    let mut got = vec![9u8; 15];
    unsafe {
        let st = fftsvd_watermark_embed(host.pixels().as_ptr(), 128, 128, bits.as_ptr(), 15, &key, marked.as_mut_ptr());
        assert_eq!(st, FftsvdStatus::Ok);
        let st = fftsvd_watermark_extract(marked.as_ptr(), host.pixels().as_ptr(), 128, 128, &key, 15, got.as_mut_ptr());
        assert_eq!(st, FftsvdStatus::Ok);
    }
    assert_eq!(got, bits);

    let host8 = host.quantized();
    unsafe {
        let st = fftsvd_watermark_embed_8bit(host8.pixels().as_ptr(), 128, 128, bits.as_ptr(), 15, &key, marked.as_mut_ptr());
        assert_eq!(st, FftsvdStatus::Ok);
        assert!(marked.iter().all(|p| p * 255.0 == (p * 255.0).round()));
        let st = fftsvd_watermark_extract(marked.as_ptr(), host8.pixels().as_ptr(), 128, 128, &key, 15, got.as_mut_ptr());
        assert_eq!(st, FftsvdStatus::Ok);
    }
    assert_eq!(got, bits);

    let too_many = [1u8; 16];
    let st = unsafe { fftsvd_watermark_embed(host.pixels().as_ptr(), 128, 128, too_many.as_ptr(), 16, &key, marked.as_mut_ptr()) };
    assert_eq!(st, FftsvdStatus::Capacity);
    let two = [2u8];
    let st = unsafe { fftsvd_watermark_embed(host.pixels().as_ptr(), 128, 128, two.as_ptr(), 1, &key, marked.as_mut_ptr()) };
    assert_eq!(st, FftsvdStatus::InvalidArgument);
    let st = unsafe { fftsvd_watermark_extract(marked.as_ptr(), host.pixels().as_ptr(), 128, 128, ptr::null(), 15, got.as_mut_ptr()) };
    assert_eq!(st, FftsvdStatus::NullPointer);
}
