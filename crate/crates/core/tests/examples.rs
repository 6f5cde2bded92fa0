macro_rules! example_test {
    ($module:ident, $file:literal) => {
        #[allow(dead_code)]
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $module() {
            $module::run_example().expect(concat!($file, " should run"));
        }
    };
}

example_test!(motivating_example, "motivating_example.rs");
example_test!(null_space_branch, "null_space_branch.rs");
example_test!(rank_distribution, "rank_distribution.rs");
example_test!(dof_sweep, "dof_sweep.rs");
example_test!(sum_rate_slope, "sum_rate_slope.rs");
example_test!(channel_dump, "channel_dump.rs");
example_test!(receiver_cascade, "receiver_cascade.rs");
example_test!(numerics_tour, "numerics_tour.rs");
