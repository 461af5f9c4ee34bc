// Generated by tools/gen_cdf_consts.py. Do not edit by hand.

/// Standard normal CDF at t = i/128 for i in 0..=1024, scaled by 2^32.
pub const PHI_Q32: [u64; 1025] = [
    2147483648, 2160869793, 2174255122, 2187638817, 2201020061, 2214398038, 2227771934, 2241140933,
    2254504222, 2267860987, 2281210416, 2294551701, 2307884032, 2321206601, 2334518603, 2347819236,
    2361107697, 2374383187, 2387644910, 2400892072, 2414123880, 2427339546, 2440538283, 2453719310,
    2466881847, 2480025116, 2493148346, 2506250767, 2519331613, 2532390124, 2545425542, 2558437113,
    2571424089, 2584385724, 2597321279, 2610230018, 2623111210, 2635964130, 2648788058, 2661582277,
    2674346077, 2687078754, 2699779608, 2712447946, 2725083079, 2737684326, 2750251010, 2762782461,
    2775278016, 2787737016, 2800158810, 2812542755, 2824888211, 2837194546, 2849461137, 2861687366,
    2873872620, 2886016297, 2898117800, 2910176539, 2922191932, 2934163404, 2946090388, 2957972323,
    2969808658, 2981598847, 2993342354, 3005038650, 3016687214, 3028287531, 3039839098, 3051341417,
    3062793999, 3074196363, 3085548036, 3096848554, 3108097460, 3119294308, 3130438658, 3141530078,
    3152568148, 3163552452, 3174482585, 3185358152, 3196178763, 3206944040, 3217653612, 3228307116,
    3238904200, 3249444519, 3259927737, 3270353527, 3280721571, 3291031559, 3301283192, 3311476176,
    3321610229, 3331685077, 3341700454, 3351656104, 3361551779, 3371387239, 3381162255, 3390876606,
    3400530078, 3410122467, 3419653578, 3429123225, 3438531230, 3447877424, 3457161645, 3466383743,
    3475543573, 3484641001, 3493675901, 3502648154, 3511557651, 3520404292, 3529187983, 3537908640,
    3546566187, 3555160557, 3563691689, 3572159531, 3580564042, 3588905184, 3597182931, 3605397264,
    3613548169, 3621635644, 3629659692, 3637620325, 3645517563, 3653351431, 3661121963, 3668829203,
    3676473198, 3684054004, 3691571687, 3699026314, 3706417966, 3713746726, 3721012686, 3728215944,
    3735356606, 3742434784, 3749450595, 3756404166, 3763295628, 3770125118, 3776892781, 3783598767,
    3790243234, 3796826342, 3803348262, 3809809167, 3816209237, 3822548658, 3828827623, 3835046327,
    3841204973, 3847303770, 3853342929, 3859322670, 3865243215, 3871104792, 3876907636, 3882651983,
    3888338076, 3893966163, 3899536495, 3905049329, 3910504924, 3915903547, 3921245465, 3926530952,
    3931760284, 3936933743, 3942051613, 3947114182, 3952121743, 3957074590, 3961973023, 3966817343,
    3971607857, 3976344872, 3981028700, 3985659655, 3990238056, 3994764222, 3999238475, 4003661143,
    4008032551, 4012353032, 4016622917, 4020842541, 4025012243, 4029132359, 4033203233, 4037225207,
    4041198625, 4045123835, 4049001185, 4052831024, 4056613704, 4060349577, 4064038998, 4067682322,
    4071279904, 4074832103, 4078339277, 4081801785, 4085219988, 4088594246, 4091924921, 4095212376,
    4098456973, 4101659076, 4104819047, 4107937252, 4111014054, 4114049818, 4117044909, 4119999690,
    4122914527, 4125789785, 4128625826, 4131423016, 4134181719, 4136902298, 4139585115, 4142230535,
    4144838918, 4147410626, 4149946021, 4152445462, 4154909309, 4157337921, 4159731655, 4162090868,
    4164415916, 4166707155, 4168964937, 4171189616, 4173381544, 4175541070, 4177668543, 4179764312,
    4181828723, 4183862121, 4185864850, 4187837252, 4189779667, 4191692435, 4193575894, 4195430378,
    4197256223, 4199053761, 4200823323, 4202565238, 4204279833, 4205967434, 4207628364, 4209262946,
    4210871498, 4212454339, 4214011785, 4215544149, 4217051744, 4218534879, 4219993862, 4221428999,
    4222840594, 4224228947, 4225594359, 4226937126, 4228257544, 4229555904, 4230832498, 4232087614,
    4233321538, 4234534553, 4235726942, 4236898983, 4238050953, 4239183128, 4240295778, 4241389175,
    4242463586, 4243519275, 4244556507, 4245575540, 4246576635, 4247560046, 4248526026, 4249474827,
    4250406698, 4251321885, 4252220631, 4253103178, 4253969765, 4254820629, 4255656004, 4256476122,
    4257281212, 4258071503, 4258847217, 4259608578, 4260355806, 4261089118, 4261808730, 4262514853,
    4263207700, 4263887478, 4264554393, 4265208648, 4265850444, 4266479981, 4267097455, 4267703059,
    4268296987, 4268879426, 4269450566, 4270010590, 4270559682, 4271098023, 4271625790, 4272143159,
    4272650305, 4273147399, 4273634611, 4274112108, 4274580055, 4275038615, 4275487949, 4275928216,
    4276359572, 4276782172, 4277196169, 4277601712, 4277998951, 4278388031, 4278769097, 4279142291,
    4279507754, 4279865623, 4280216036, 4280559126, 4280895026, 4281223866, 4281545777, 4281860883,
    4282169310, 4282471182, 4282766620, 4283055742, 4283338668, 4283615512, 4283886389, 4284151412,
    4284410691, 4284664335, 4284912451, 4285155145, 4285392522, 4285624683, 4285851729, 4286073759,
    4286290872, 4286503162, 4286710724, 4286913652, 4287112036, 4287305966, 4287495531, 4287680819,
    4287861913, 4288038899, 4288211859, 4288380874, 4288546024, 4288707388, 4288865043, 4289019065,
    4289169528, 4289316506, 4289460070, 4289600291, 4289737239, 4289870982, 4290001587, 4290129120,
    4290253645, 4290375226, 4290493926, 4290609805, 4290722924, 4290833342, 4290941116, 4291046304,
    4291148961, 4291249143, 4291346902, 4291442291, 4291535363, 4291626168, 4291714756, 4291801176,
    4291885475, 4291967701, 4292047900, 4292126117, 4292202396, 4292276781, 4292349314, 4292420038,
    4292488992, 4292556218, 4292621755, 4292685640, 4292747913, 4292808609, 4292867766, 4292925418,
    4292981601, 4293036349, 4293089695, 4293141671, 4293192311, 4293241645, 4293289704, 4293336518,
    4293382116, 4293426528, 4293469782, 4293511905, 4293552924, 4293592866, 4293631757, 4293669622,
    4293706485, 4293742372, 4293777306, 4293811310, 4293844407, 4293876619, 4293907968, 4293938476,
    4293968162, 4293997047, 4294025152, 4294052495, 4294079095, 4294104972, 4294130144, 4294154627,
    4294178440, 4294201599, 4294224121, 4294246022, 4294267318, 4294288025, 4294308157, 4294327729,
    4294346756, 4294365252, 4294383230, 4294400704, 4294417687, 4294434191, 4294450230, 4294465816,
    4294480959, 4294495673, 4294509968, 4294523855, 4294537346, 4294550450, 4294563178, 4294575541,
    4294587547, 4294599206, 4294610528, 4294621522, 4294632196, 4294642560, 4294652622, 4294662389,
    4294671870, 4294681074, 4294690006, 4294698675, 4294707089, 4294715253, 4294723176, 4294730863,
    4294738321, 4294745557, 4294752577, 4294759387, 4294765992, 4294772399, 4294778613, 4294784639,
    4294790483, 4294796150, 4294801645, 4294806973, 4294812139, 4294817147, 4294822002, 4294826708,
    4294831269, 4294835690, 4294839975, 4294844127, 4294848151, 4294852051, 4294855829, 4294859489,
    4294863036, 4294866471, 4294869799, 4294873023, 4294876146, 4294879170, 4294882099, 4294884935,
    4294887681, 4294890341, 4294892916, 4294895409, 4294897822, 4294900158, 4294902420, 4294904609,
    4294906728, 4294908778, 4294910762, 4294912683, 4294914541, 4294916339, 4294918078, 4294919761,
    4294921389, 4294922964, 4294924487, 4294925961, 4294927386, 4294928764, 4294930097, 4294931385,
    4294932632, 4294933836, 4294935001, 4294936127, 4294937216, 4294938268, 4294939285, 4294940268,
    4294941219, 4294942137, 4294943024, 4294943881, 4294944710, 4294945510, 4294946283, 4294947030,
    4294947752, 4294948449, 4294949122, 4294949772, 4294950400, 4294951006, 4294951592, 4294952157,
    4294952703, 4294953230, 4294953739, 4294954230, 4294954704, 4294955162, 4294955603, 4294956030,
    4294956441, 4294956838, 4294957221, 4294957590, 4294957947, 4294958291, 4294958623, 4294958943,
    4294959252, 4294959549, 4294959837, 4294960114, 4294960381, 4294960638, 4294960887, 4294961126,
    4294961357, 4294961579, 4294961794, 4294962001, 4294962200, 4294962392, 4294962577, 4294962756,
    4294962928, 4294963093, 4294963253, 4294963407, 4294963555, 4294963698, 4294963835, 4294963968,
    4294964095, 4294964218, 4294964336, 4294964450, 4294964560, 4294964665, 4294964767, 4294964865,
    4294964959, 4294965050, 4294965137, 4294965221, 4294965302, 4294965380, 4294965455, 4294965527,
    4294965597, 4294965663, 4294965728, 4294965789, 4294965849, 4294965906, 4294965961, 4294966014,
    4294966065, 4294966114, 4294966161, 4294966206, 4294966250, 4294966291, 4294966332, 4294966370,
    4294966407, 4294966443, 4294966477, 4294966510, 4294966542, 4294966573, 4294966602, 4294966630,
    4294966657, 4294966683, 4294966708, 4294966732, 4294966755, 4294966777, 4294966798, 4294966819,
    4294966838, 4294966857, 4294966875, 4294966893, 4294966909, 4294966925, 4294966940, 4294966955,
    4294966969, 4294966983, 4294966996, 4294967008, 4294967020, 4294967032, 4294967043, 4294967054,
    4294967064, 4294967074, 4294967083, 4294967092, 4294967100, 4294967109, 4294967117, 4294967124,
    4294967132, 4294967139, 4294967145, 4294967152, 4294967158, 4294967164, 4294967169, 4294967175,
    4294967180, 4294967185, 4294967190, 4294967194, 4294967199, 4294967203, 4294967207, 4294967211,
    4294967214, 4294967218, 4294967221, 4294967225, 4294967228, 4294967231, 4294967234, 4294967236,
    4294967239, 4294967241, 4294967244, 4294967246, 4294967248, 4294967250, 4294967252, 4294967254,
    4294967256, 4294967258, 4294967260, 4294967261, 4294967263, 4294967264, 4294967266, 4294967267,
    4294967268, 4294967270, 4294967271, 4294967272, 4294967273, 4294967274, 4294967275, 4294967276,
    4294967277, 4294967278, 4294967279, 4294967279, 4294967280, 4294967281, 4294967281, 4294967282,
    4294967283, 4294967283, 4294967284, 4294967285, 4294967285, 4294967286, 4294967286, 4294967286,
    4294967287, 4294967287, 4294967288, 4294967288, 4294967288, 4294967289, 4294967289, 4294967289,
    4294967290, 4294967290, 4294967290, 4294967291, 4294967291, 4294967291, 4294967291, 4294967292,
    4294967292, 4294967292, 4294967292, 4294967292, 4294967293, 4294967293, 4294967293, 4294967293,
    4294967293, 4294967293, 4294967293, 4294967294, 4294967294, 4294967294, 4294967294, 4294967294,
    4294967294, 4294967294, 4294967294, 4294967294, 4294967294, 4294967294, 4294967295, 4294967295,
    4294967295, 4294967295, 4294967295, 4294967295, 4294967295, 4294967295, 4294967295, 4294967295,
    4294967295, 4294967295, 4294967295, 4294967295, 4294967295, 4294967295, 4294967295, 4294967295,
    4294967295, 4294967295, 4294967295, 4294967295, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296, 4294967296,
    4294967296,
];

/// Reciprocal of each scale level, scaled by 2^16 and rounded.
pub const INV_SCALE_Q16: [u64; 64] = [
    595782, 538520, 486761, 439978, 397690, 359468, 324918, 293690,
    265462, 239948, 216886, 196041, 177199, 160168, 144774, 130859,
    118282, 106914, 96638, 87350, 78955, 71366, 64507, 58307,
    52703, 47638, 43059, 38920, 35180, 31799, 28742, 25980,
    23483, 21226, 19186, 17342, 15675, 14168, 12807, 11576,
    10463, 9458, 8549, 7727, 6984, 6313, 5706, 5158,
    4662, 4214, 3809, 3443, 3112, 2813, 2543, 2298,
    2077, 1878, 1697, 1534, 1387, 1253, 1133, 1024,
];

/// Scale levels (informational; tables only use `INV_SCALE_Q16`).
pub const SCALE_LEVELS: [f64; 64] = [
    0.11,
    0.12169653071448308,
    0.13463677807219204,
    0.14895298907237783,
    0.16479147281509718,
    0.18231409575388527,
    0.20169993594178098,
    0.223147113176802,
    0.2468748137506265,
    0.27312553049304916,
    0.3021675410050622,
    0.334297649407658,
    0.3698442196265323,
    0.40917053121231195,
    0.4526784919921861,
    0.5008127454955724,
    0.5540652151309684,
    0.6129801315546598,
    0.6781595946100867,
    0.7502697266798892,
    0.8300474803367814,
    0.918308169866222,
    1.0159538036316857,
    1.1239823024378124,
    1.2434976981014423,
    1.3757214164581015,
    1.5220047601142321,
    1.6838427185166462,
    1.862889246475634,
    2.060974167285475,
    2.280121873189209,
    2.522572014303048,
    2.790802387437512,
    3.0875542587349263,
    3.4158603789160726,
    3.779075977446779,
    4.180913052379246,
    4.625478306304129,
    5.11731511611196,
    5.661449965487343,
    6.263443814667633,
    6.929448932455806,
    7.666271771300455,
    8.481442528014913,
    9.383292101033543,
    10.381037230694501,
    11.484874692667326,
    12.70608550716526,
    14.057150228941685,
    15.55187649631368,
    17.205540142740777,
    19.035041313093856,
    21.059077180094373,
    23.29833302605477,
    25.77569364274118,
    28.516477209826895,
    31.548694042132322,
    34.90333285000169,
    38.61467743834597,
    42.72065708095934,
    47.26323415087152,
    52.28883296824856,
    57.84881424859033,
    64.0,
];

/// Geometric midpoints between adjacent scale levels.
pub const SCALE_BOUNDS: [f64; 63] = [
    0.1157005547894786,
    0.1280032374510956,
    0.14161409016382295,
    0.1566722133929569,
    0.1733314984480184,
    0.19176220022424226,
    0.21215267717696684,
    0.23471131631115055,
    0.25966866285906076,
    0.28727977641105856,
    0.3178268375787111,
    0.3516220318298604,
    0.38901073996792324,
    0.4303750678615469,
    0.47613775149782256,
    0.5267664772679971,
    0.582778661638226,
    0.6447467390527428,
    0.713304012110863,
    0.7891511238055786,
    0.8730632179688586,
    0.9658978611021148,
    1.0686038065515184,
    1.1822306905964584,
    1.3079397595434221,
    1.4470157374542698,
    1.600879955794945,
    1.7711048791872712,
    1.9594301757144055,
    2.167780496015574,
    2.398285142869242,
    2.6532998322843198,
    2.9354307684938323,
    3.2475612788931665,
    3.5928812811271658,
    3.974919883474395,
    4.397581451698647,
    4.865185510964414,
    5.382510890606717,
    5.954844562906909,
    6.588035674997939,
    7.288555326095427,
    8.063562700967104,
    8.920978235512758,
    9.869564562193757,
    10.919016062559876,
    12.08005794208411,
    13.364555839832493,
    14.785637093159993,
    16.357824896735867,
    18.09718672697957,
    20.021498548778222,
    22.150426482648797,
    24.505727788950622,
    27.11147322317083,
    29.994293034713586,
    33.183649123256615,
    36.7121361340639,
    40.615814569394466,
    44.934579320346025,
    49.71256738546242,
    54.998608942915794,
    60.84672638613996,
];
