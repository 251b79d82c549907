/** Browser entry point: boot the app against the serving origin. */

import { initApp } from "./app.js";

window.addEventListener("DOMContentLoaded", () => {
  initApp(document, (input, init) => fetch(input, init));
});
