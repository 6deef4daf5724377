//! Every example in `examples/` runs to completion.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", stringify!($name), ".rs"));
        }

        #[test]
        fn $name() {
            $name::run().unwrap();
        }
    };
}

example!(renorm_exponents);
example!(phi_quadrature);
example!(variational_sup);
example!(gasket_resistance);
example!(chain_profile);
example!(heat_kernel);
example!(verify_local);
example!(verify_jump);
example!(config_run);
